"""Independent verification engine: unitary propagation, invariance and
intertwining residuals, the projected matrix Schrodinger equation, and
discretized Berry holonomies.

The propagator applies the exact exponential of the midpoint Hamiltonian on
each step: second order in the step, unitary to rounding by construction.
Unitarity matters more than order here because unitarity defects would
masquerade as superalgebra violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operators import Operator, expm_i_hermitian, polar_unitary

FD_STEP = 1e-5
STEP_NORM_LIMIT = 0.5


class StepSizeError(ValueError):
    def __init__(self, h_norm: float, dt: float):
        suggested = 0.4 * dt / (h_norm * dt) if h_norm > 0 else dt
        super().__init__(
            f"step too large: ||H||*dt = {h_norm * dt:.3g} >= {STEP_NORM_LIMIT} "
            f"(try dt <= {suggested:.3g})")
        self.suggested_dt = suggested


class EigenvalueCrossingError(ValueError):
    def __init__(self, t: float, detail: str):
        super().__init__(f"eigenvalue crossing detected near t = {t:.6g}: {detail}")
        self.t = t


class NonClosedLoopError(ValueError):
    pass


def _mat(x) -> np.ndarray:
    return x.entries if isinstance(x, Operator) else np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class Trajectory:
    """Sampled states or operators on a time grid, with per-point diagnostics."""

    times: np.ndarray
    states: np.ndarray | None = None      # (nt, dim)
    operators: np.ndarray | None = None   # (nt, dim, dim)
    norm_drift: np.ndarray | None = None
    unitarity_defect: np.ndarray | None = None


def _check_grid(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    return times


def _step_unitaries(h: Callable[[float], Operator], times: np.ndarray):
    for k in range(times.size - 1):
        dt = times[k + 1] - times[k]
        hm = _mat(h(times[k] + dt / 2))
        h_norm = float(np.linalg.norm(hm))
        if h_norm * dt >= STEP_NORM_LIMIT:
            raise StepSizeError(h_norm, dt)
        yield expm_i_hermitian(hm, dt)


def propagate(h: Callable[[float], Operator], psi0: np.ndarray,
              times: np.ndarray) -> Trajectory:
    """Midpoint-exponential propagation of a state under H(t)."""
    times = _check_grid(times)
    psi = np.asarray(psi0, dtype=complex)
    norm0 = float(np.linalg.norm(psi))
    if abs(norm0 - 1.0) > 1e-9:
        raise ValueError(f"initial state must be normalized, got norm {norm0}")
    states = np.empty((times.size, psi.size), dtype=complex)
    drift = np.empty(times.size)
    states[0], drift[0] = psi, 0.0
    for k, u in enumerate(_step_unitaries(h, times)):
        psi = u @ psi
        states[k + 1] = psi
        drift[k + 1] = abs(np.linalg.norm(psi) - norm0)
    return Trajectory(times, states=states, norm_drift=drift)


def propagate_unitary(h: Callable[[float], Operator], dim: int,
                      times: np.ndarray) -> Trajectory:
    """Propagate the full evolution operator from U(0) = 1."""
    times = _check_grid(times)
    u = np.eye(dim, dtype=complex)
    ops = np.empty((times.size, dim, dim), dtype=complex)
    defects = np.empty(times.size)
    ops[0], defects[0] = u, 0.0
    for k, step in enumerate(_step_unitaries(h, times)):
        u = step @ u
        ops[k + 1] = u
        defects[k + 1] = float(np.linalg.norm(u.conj().T @ u - np.eye(dim)))
    return Trajectory(times, operators=ops, unitarity_defect=defects)


def lvn_residual(i_map: Callable[[float], Operator], h_map: Callable[[float], Operator],
                 t: float, h: float = FD_STEP, i_dot: np.ndarray | None = None,
                 projector: np.ndarray | None = None) -> float:
    """|| dI/dt - i [I, H] ||, the defining residual of a dynamical invariant.

    dI/dt by central difference unless an exact derivative is supplied; pass a
    projector to restrict the residual to a trusted subspace.
    """
    im, hm = _mat(i_map(t)), _mat(h_map(t))
    if i_dot is None:
        i_dot = (_mat(i_map(t + h)) - _mat(i_map(t - h))) / (2 * h)
    residual = i_dot - 1j * (im @ hm - hm @ im)
    if projector is not None:
        p = _mat(projector)
        residual = p @ residual @ p
    return float(np.linalg.norm(residual))


def intertwining_residual(d_map: Callable[[float], Operator],
                          h_plus: Callable[[float], Operator],
                          h_minus: Callable[[float], Operator],
                          t: float, h: float = FD_STEP,
                          projector: np.ndarray | None = None) -> float:
    """|| i dd/dt - H_- d + d H_+ ||, the operator form of the intertwining relation."""
    d_dot = (_mat(d_map(t + h)) - _mat(d_map(t - h))) / (2 * h)
    dm = _mat(d_map(t))
    residual = 1j * d_dot - _mat(h_minus(t)) @ dm + dm @ _mat(h_plus(t))
    if projector is not None:
        p = _mat(projector)
        residual = p @ residual @ p
    return float(np.linalg.norm(residual))


def _align_frame(raw: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Rotate a raw eigenframe to maximize overlap with the previous one."""
    return raw @ polar_unitary(raw.conj().T @ previous)


@dataclass(frozen=True)
class LevelEvolution:
    """Solution u^n of the projected matrix Schrodinger equation on one level."""

    times: np.ndarray
    value: float
    u: np.ndarray        # (nt, d, d)
    frames: np.ndarray   # (nt, dim, d)

    @property
    def degeneracy(self) -> int:
        return self.u.shape[1]

    def unitarity_defect(self) -> float:
        d = self.degeneracy
        return max(float(np.linalg.norm(uk.conj().T @ uk - np.eye(d)))
                   for uk in self.u)

    def solution(self, a: int) -> np.ndarray:
        """Reconstructed Schrodinger solution sum_b u_ba |lam,b;t> as (nt, dim)."""
        return np.einsum("tnb,tb->tn", self.frames, self.u[:, :, a])


def projected_schrodinger(i_map: Callable[[float], Operator],
                          h_map: Callable[[float], Operator],
                          level: int, times: np.ndarray,
                          cluster_scale: float = 1e-8) -> LevelEvolution:
    """Integrate i du/dt = (E - A) u over the smooth eigenframe of level ``level``.

    The eigenframe is made smooth by aligning each grid point to the previous
    one (phase and degenerate-block rotation via the polar decomposition of the
    frame overlap). A change in the level's degeneracy or a collision with a
    neighboring level is reported as a crossing.
    """
    from .operators import eigh as _eigh

    times = _check_grid(times)

    def frame_at(t: float):
        es = _eigh(i_map(t), cluster_scale=cluster_scale)
        if not 0 <= level < len(es.degeneracy_groups):
            raise ValueError(f"level index {level} out of range "
                             f"({len(es.degeneracy_groups)} groups)")
        group = list(es.degeneracy_groups[level])
        return es.vectors[:, group], float(es.values[group].mean()), \
            tuple(len(g) for g in es.degeneracy_groups)

    v0, lam0, shape0 = frame_at(times[0])
    d = v0.shape[1]
    nt = times.size
    frames = np.empty((nt, v0.shape[0], d), dtype=complex)
    frames[0] = v0
    u = np.empty((nt, d, d), dtype=complex)
    u[0] = np.eye(d)

    for k in range(nt - 1):
        t0, t1 = times[k], times[k + 1]
        dt = t1 - t0
        raw, lam1, shape1 = frame_at(t1)
        if shape1 != shape0:
            raise EigenvalueCrossingError(
                t1, f"degeneracy pattern changed from {shape0} to {shape1}")
        if abs(lam1 - lam0) > 1e-6 * max(1.0, abs(lam0)):
            raise EigenvalueCrossingError(
                t1, f"tracked eigenvalue moved from {lam0:.6g} to {lam1:.6g}")
        frames[k + 1] = _align_frame(raw, frames[k])
        vbar = (frames[k] + frames[k + 1]) / 2
        vbar = vbar @ np.linalg.inv(
            np.linalg.cholesky(vbar.conj().T @ vbar).conj().T)
        dv = (frames[k + 1] - frames[k]) / dt
        a_mid = 1j * (vbar.conj().T @ dv)
        a_mid = (a_mid + a_mid.conj().T) / 2
        hm = _mat(h_map(t0 + dt / 2))
        e_mid = vbar.conj().T @ hm @ vbar
        e_mid = (e_mid + e_mid.conj().T) / 2
        u[k + 1] = expm_i_hermitian(e_mid - a_mid, dt) @ u[k]

    return LevelEvolution(times, lam0, u, frames)


@dataclass(frozen=True)
class HolonomyResult:
    """Path-ordered loop holonomy of one eigenframe level."""

    gamma: np.ndarray
    steps: int
    label: str = ""

    @property
    def degeneracy(self) -> int:
        return self.gamma.shape[0]

    def unitarity(self) -> float:
        return float(np.linalg.norm(self.gamma.conj().T @ self.gamma
                                    - np.eye(self.degeneracy)))


def berry_holonomy(frame: Callable[[float], np.ndarray], steps: int,
                   period: float = 1.0, label: str = "",
                   closure_tol: float = 1e-12) -> HolonomyResult:
    """Discretized path-ordered holonomy of a single-valued closed frame.

    ``frame(s)`` must return orthonormal columns spanning the tracked level and
    satisfy frame(period) = frame(0); the discrete product of unitarized
    overlaps converges to the continuum holonomy as steps grow.
    """
    if steps < 2:
        raise ValueError("at least two steps are required")
    v0 = np.asarray(frame(0.0), dtype=complex)
    if v0.ndim == 1:
        v0 = v0[:, None]
    v_end = np.asarray(frame(period), dtype=complex).reshape(v0.shape)
    closure = float(np.linalg.norm(v_end - v0))
    if closure > closure_tol * max(1.0, np.linalg.norm(v0)):
        raise NonClosedLoopError(
            f"frame is not closed over the loop: ||frame(T) - frame(0)|| = {closure:.3e}")

    d = v0.shape[1]
    gamma = np.eye(d, dtype=complex)
    prev = v0
    for k in range(1, steps + 1):
        cur = v0 if k == steps else np.asarray(frame(period * k / steps),
                                               dtype=complex).reshape(v0.shape)
        # Later times multiply from the left: Gamma = M_{N-1} ... M_0.
        gamma = polar_unitary(cur.conj().T @ prev) @ gamma
        prev = cur
    return HolonomyResult(gamma, steps, label)
