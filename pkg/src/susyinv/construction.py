"""Generative core: gauge curves W(t), partner Hamiltonians H = W Y W^dag - i W dW^dag/dt,
closed-form evolution operators, and the four-step pairing prescription.

Closed-form gauge kinds differentiate W exactly through the chain rule on the
three-exponential product, so the closed-form coefficient formulas can be
cross-checked against an independent matrix route with no finite-difference
error in either side.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .operators import Operator, NonHermitianError, eigh, unitarity_defect
from .representations import OscillatorRep, SpinRep
from .susy import ZERO_MODE_SCALE
from .timefunc import TimeFunction

GAUGE_UNITARITY_TOL = 1e-10
HERMITICITY_TOL = {"spin_su2": 1e-9, "osc_su11": 1e-9, "explicit": 1e-6}


class NonCommutingYError(ValueError):
    pass


def _diag_or_none(m: np.ndarray) -> np.ndarray | None:
    off = m[~np.eye(m.shape[0], dtype=bool)]
    if np.any(off != 0):
        return None
    return np.real(np.diag(m)).copy()


@dataclass(frozen=True)
class GaugeCurve:
    """Unitary curve W(t). Closed-form kinds: W = e^{-i phi D3} e^{-i theta D2} e^{i phi D3}."""

    kind: str  # "spin_su2" | "osc_su11" | "explicit"
    d3: Operator | None = None
    d2: Operator | None = None
    theta: TimeFunction | None = None
    phi: TimeFunction | None = None
    fn: Callable[[float], np.ndarray] | None = None
    fd_step: float = 1e-6

    @classmethod
    def spin(cls, rep: SpinRep, theta: TimeFunction, phi: TimeFunction) -> "GaugeCurve":
        return cls("spin_su2", rep.J3, rep.J2, theta, phi)

    @classmethod
    def oscillator(cls, rep: OscillatorRep, theta: TimeFunction,
                   phi: TimeFunction) -> "GaugeCurve":
        return cls("osc_su11", rep.K3, rep.K2, theta, phi)

    @classmethod
    def explicit(cls, fn: Callable[[float], np.ndarray]) -> "GaugeCurve":
        return cls("explicit", fn=fn)

    @cached_property
    def _d3_diag(self) -> np.ndarray:
        diag = _diag_or_none(self.d3.entries)
        if diag is None:
            raise ValueError("the commuting generator D3 must be diagonal in this basis")
        return diag

    @cached_property
    def _d2_eig(self) -> tuple[np.ndarray, np.ndarray]:
        es = eigh(self.d2)
        return es.values, np.ascontiguousarray(es.vectors)

    @cached_property
    def _theta_dot(self) -> TimeFunction:
        return self.theta.derivative()

    @cached_property
    def _phi_dot(self) -> TimeFunction:
        return self.phi.derivative()

    @property
    def dim(self) -> int:
        if self.kind == "explicit":
            return np.asarray(self.fn(0.0)).shape[0]
        return self.d3.dim

    def _factors(self, t: float):
        th, ph = self.theta(t), self.phi(t)
        e1 = np.exp(-1j * ph * self._d3_diag)
        w2, v2 = self._d2_eig
        e2 = (v2 * np.exp(-1j * th * w2)) @ v2.conj().T
        return e1, e2

    def value(self, t: float) -> Operator:
        if self.kind == "explicit":
            return Operator(np.asarray(self.fn(t), dtype=complex))
        e1, e2 = self._factors(t)
        return Operator(e1[:, None] * e2 * np.conj(e1)[None, :])

    def derivative(self, t: float) -> Operator:
        """dW/dt; exact chain rule for closed-form kinds, central FD for explicit."""
        if self.kind == "explicit":
            h = self.fd_step * max(1.0, abs(t))
            wp = np.asarray(self.fn(t + h), dtype=complex)
            wm = np.asarray(self.fn(t - h), dtype=complex)
            return Operator((wp - wm) / (2 * h))
        e1, e2 = self._factors(t)
        d3 = self._d3_diag
        th_dot, ph_dot = self._theta_dot(t), self._phi_dot(t)
        w2, v2 = self._d2_eig
        w = e1[:, None] * e2 * np.conj(e1)[None, :]
        # d/dt of each factor, assembled by the product rule.
        d2e2 = (v2 * (w2 * np.exp(-1j * self.theta(t) * w2))) @ v2.conj().T
        term_phi = -1j * ph_dot * (d3[:, None] * w - w * d3[None, :])
        term_theta = -1j * th_dot * (e1[:, None] * d2e2 * np.conj(e1)[None, :])
        return Operator(term_phi + term_theta)

    def identity_start_defect(self) -> float:
        """||W(0) - 1||; zero is required by the pairing prescription but the
        closed-form solution family stays exact for offset starts."""
        w0 = self.value(0.0).entries
        return float(np.linalg.norm(w0 - np.eye(w0.shape[0])))


@dataclass(frozen=True)
class YSpec:
    """Hermitian Y(t) = f(t) D + g(t) D^2 over a diagonal generator D.

    Y(t) at different times commute by construction, so the evolution factor
    is a plain exponential of the antiderivative.
    """

    D: Operator
    f: TimeFunction
    g: TimeFunction | None = None

    def __post_init__(self):
        if _diag_or_none(self.D.entries) is None:
            raise ValueError("YSpec requires the commuting generator to be diagonal")

    @cached_property
    def _d_diag(self) -> np.ndarray:
        return _diag_or_none(self.D.entries)

    @cached_property
    def _f_anti(self) -> TimeFunction:
        return self.f.antiderivative()

    @cached_property
    def _g_anti(self) -> TimeFunction | None:
        return None if self.g is None else self.g.antiderivative()

    @property
    def dim(self) -> int:
        return self.D.dim

    def diagonal(self, t: float) -> np.ndarray:
        d = self._d_diag
        out = self.f(t) * d
        if self.g is not None:
            out = out + self.g(t) * d * d
        return out

    def value(self, t: float) -> Operator:
        return Operator(np.diag(self.diagonal(t)).astype(complex))

    def integral_diagonal(self, t: float) -> np.ndarray:
        """Diagonal of int_0^t Y(s) ds, exact through the antiderivatives."""
        d = self._d_diag
        out = self._f_anti(t) * d
        if self._g_anti is not None:
            out = out + self._g_anti(t) * d * d
        return out

    def eigen_phase(self, mu: float, t: float) -> float:
        """int_0^t y(s) ds on a D-eigenvector with eigenvalue mu."""
        out = self._f_anti(t) * mu
        if self._g_anti is not None:
            out += self._g_anti(t) * mu * mu
        return float(out)

    def commutation_defect(self, i0: Operator, ts=(0.0, 0.7, 1.3)) -> float:
        m0 = i0.entries
        return max(float(np.linalg.norm(self.value(t).entries @ m0
                                        - m0 @ self.value(t).entries)) for t in ts)


@dataclass(frozen=True)
class ExplicitY:
    """Caller-supplied Y(t) with no commuting guarantee; usable for H, not for U."""

    fn: Callable[[float], np.ndarray]

    def value(self, t: float) -> Operator:
        return Operator(np.asarray(self.fn(t), dtype=complex))


def hamiltonian_from_gauge(w: GaugeCurve, y: YSpec | ExplicitY, t: float) -> Operator:
    """H(t) = W Y W^dag - i W dW^dag/dt; Hermitian up to the kind's tolerance."""
    wm = w.value(t).entries
    u_defect = unitarity_defect(wm)
    if u_defect > GAUGE_UNITARITY_TOL * max(1.0, np.linalg.norm(wm)):
        raise ValueError(f"gauge curve is not unitary at t={t}: defect {u_defect:.3e}")
    wd = w.derivative(t).entries
    ym = y.value(t).entries
    h = wm @ ym @ wm.conj().T - 1j * (wm @ wd.conj().T)
    defect = float(np.linalg.norm(h - h.conj().T))
    tol = HERMITICITY_TOL[w.kind]
    if defect > tol * max(1.0, np.linalg.norm(h)):
        raise NonHermitianError(defect)
    return Operator(h)


def evolution_from_gauge(w: GaugeCurve, y: YSpec, t: float) -> Operator:
    """U(t) = W(t) exp(-i int_0^t Y); valid because Y(t) at different t commute."""
    if not isinstance(y, YSpec):
        raise NonCommutingYError(
            "evolution requires a commuting YSpec; time-ordered products are not implemented")
    phases = np.exp(-1j * y.integral_diagonal(t))
    return Operator(w.value(t).entries * phases[None, :])


@dataclass(frozen=True)
class SuperSystem:
    """Inputs to the pairing prescription: solvable plus sector, d0, gauge, Y."""

    rep: SpinRep | OscillatorRep
    d0: Operator
    w_minus: GaugeCurve
    y_minus: YSpec
    h_plus: Callable[[float], Operator]
    u_plus: Callable[[float], Operator]

    def plus_sector_defect(self, ts=(0.3, 1.1), h: float = 1e-5) -> float:
        """Finite-difference residual of i dU+/dt = H+ U+ plus ||U+(0) - 1||."""
        u0 = self.u_plus(0.0).entries
        worst = float(np.linalg.norm(u0 - np.eye(u0.shape[0])))
        for t in ts:
            du = (self.u_plus(t + h).entries - self.u_plus(t - h).entries) / (2 * h)
            res = 1j * du - self.h_plus(t).entries @ self.u_plus(t).entries
            worst = max(worst, float(np.linalg.norm(res)))
        return worst


@dataclass(frozen=True)
class SolutionLevel:
    """One positive level after splitting by the commuting generator."""

    lam: float
    mu: float
    v_plus: np.ndarray
    v_minus: np.ndarray


@dataclass(frozen=True)
class PartnerOutput:
    """Everything the prescription produces, as maps of t."""

    system: SuperSystem
    iplus_ref: Operator
    iminus_ref: Operator
    levels: tuple[SolutionLevel, ...]
    kernel_dim_plus: int
    kernel_dim_minus: int

    def h_minus(self, t: float) -> Operator:
        return hamiltonian_from_gauge(self.system.w_minus, self.system.y_minus, t)

    def u_minus(self, t: float) -> Operator:
        return evolution_from_gauge(self.system.w_minus, self.system.y_minus, t)

    def propagator_minus(self, t: float) -> Operator:
        """U(t) U(0)^dag: the evolution operator normalized to 1 at t = 0.

        Identical to u_minus when the gauge starts at the identity; for offset
        starts (theta(0) != 0) only this combination transports I-(0) to I-(t).
        """
        u = self.u_minus(t).entries
        u0 = self.u_minus(0.0).entries
        return Operator(u @ u0.conj().T)

    def i_plus(self, t: float) -> Operator:
        u = self.system.u_plus(t).entries
        return Operator(u @ self.iplus_ref.entries @ u.conj().T)

    def i_minus(self, t: float) -> Operator:
        w = self.system.w_minus.value(t).entries
        return Operator(w @ self.iminus_ref.entries @ w.conj().T)

    def d(self, t: float) -> Operator:
        w = self.system.w_minus.value(t).entries
        u = self.system.u_plus(t).entries
        return Operator(w @ self.system.d0.entries @ u.conj().T)

    def mapped_solution(self, level: int, t: float) -> np.ndarray:
        """Exact minus-sector solution e^{-i int y} W(t) d0 |lam,+;0> / sqrt(2 lam)."""
        lv = self.levels[level]
        phase = np.exp(-1j * self.system.y_minus.eigen_phase(lv.mu, t))
        return phase * (self.system.w_minus.value(t).entries @ lv.v_minus)

    def level_for_label(self, mu: float) -> int:
        """Locate a level by its commuting-generator eigenvalue mu."""
        for i, lv in enumerate(self.levels):
            if abs(lv.mu - mu) < 1e-6:
                return i
        raise KeyError(f"no positive level with generator eigenvalue {mu}")

    def identity_defects(self, ts=(0.4, 1.7)) -> dict[str, float]:
        """Residuals of I+(t) = d^dag d / 2 and I-(t) = d d^dag / 2 at samples."""
        worst_p = worst_m = 0.0
        for t in ts:
            dm = self.d(t).entries
            worst_p = max(worst_p, float(np.linalg.norm(
                dm.conj().T @ dm / 2 - self.i_plus(t).entries)))
            worst_m = max(worst_m, float(np.linalg.norm(
                dm @ dm.conj().T / 2 - self.i_minus(t).entries)))
        return {"iplus": worst_p, "iminus": worst_m}


def run_prescription(system: SuperSystem) -> PartnerOutput:
    """Steps 1-4: reference invariants from d0, transported partners, solution levels.

    Positive levels of I+(0) are split inside each degenerate cluster so every
    mapped minus-sector vector is an eigenvector of the commuting generator;
    the scalar solution phase is exact only in that sub-basis.
    """
    d0 = system.d0.entries
    iplus_ref = Operator(d0.conj().T @ d0 / 2)
    iminus_ref = Operator(d0 @ d0.conj().T / 2)
    es = eigh(iplus_ref)
    scale = max(1.0, iplus_ref.norm())
    zero_tol = ZERO_MODE_SCALE * scale
    d_diag = system.y_minus.D

    levels: list[SolutionLevel] = []
    kernel_plus = 0
    for group in es.degeneracy_groups:
        lam = float(es.values[list(group)].mean())
        if lam < zero_tol:
            kernel_plus += len(group)
            continue
        vp = es.vectors[:, list(group)]
        vm = d0 @ vp / np.sqrt(2 * lam)
        # Split the cluster so each minus vector diagonalizes the generator.
        block = vm.conj().T @ d_diag.entries @ vm
        block = (block + block.conj().T) / 2
        mus, s = np.linalg.eigh(block)
        vp = vp @ s
        vm = vm @ s
        for k in range(len(group)):
            residual = np.linalg.norm(d_diag.entries @ vm[:, k] - mus[k] * vm[:, k])
            if residual > 1e-8 * max(1.0, abs(mus[k])):
                raise ValueError(
                    f"level {lam:.6g} does not split into generator eigenvectors "
                    f"(residual {residual:.3e}); the scalar-phase solution form "
                    "does not apply")
            levels.append(SolutionLevel(lam, float(mus[k]), vp[:, k], vm[:, k]))
    levels.sort(key=lambda lv: (lv.lam, lv.mu))
    # dim Ker(I-) = dim - rank(d0) = dim - (number of positive levels).
    kernel_minus = iminus_ref.dim - len(levels)
    return PartnerOutput(system, iplus_ref, iminus_ref, tuple(levels),
                         kernel_plus, kernel_minus)


def spin_supersystem(rep: SpinRep, theta: TimeFunction, phi: TimeFunction,
                     f: TimeFunction, g: TimeFunction | None = None,
                     b: float = 1.0, d0: Operator | None = None) -> SuperSystem:
    """Constant dipole plus sector H+ = b J3 with d0 = J+ by default."""
    if d0 is None:
        d0 = rep.Jplus
    m = rep.m_values()
    h_plus_mat = Operator(np.diag(b * m).astype(complex))
    gauge = GaugeCurve.spin(rep, theta, phi)
    y = YSpec(rep.J3, f, g)
    return SuperSystem(
        rep, d0, gauge, y,
        h_plus=lambda t: h_plus_mat,
        u_plus=lambda t: Operator(np.diag(np.exp(-1j * b * t * m))),
    )


def oscillator_supersystem(rep: OscillatorRep, theta: TimeFunction,
                           phi: TimeFunction, f: TimeFunction,
                           d0: Operator | None = None) -> SuperSystem:
    """Unit oscillator plus sector H+ = a^dag a + 1/2 with d0 = a^dag by default."""
    if d0 is None:
        d0 = rep.adag
    energies = np.arange(rep.N) + 0.5
    h_plus_mat = rep.hamiltonian_plus()
    gauge = GaugeCurve.oscillator(rep, theta, phi)
    y = YSpec(rep.K3, f)
    return SuperSystem(
        rep, d0, gauge, y,
        h_plus=lambda t: h_plus_mat,
        u_plus=lambda t: Operator(np.diag(np.exp(-1j * t * energies))),
    )


def closed_form_spin_R(f: TimeFunction, theta: TimeFunction, phi: TimeFunction,
                       t: float) -> tuple[float, float, float]:
    """Coefficients of H_-(t) over (J1, J2, J3) for Y = f J3 and the su(2) gauge."""
    th, ph = theta(t), phi(t)
    th_dot, ph_dot = theta.derivative()(t), phi.derivative()(t)
    ft = f(t)
    r1 = np.sin(th) * np.cos(ph) * (ft - ph_dot) - np.sin(ph) * th_dot
    r2 = np.sin(th) * np.sin(ph) * (ft - ph_dot) + np.cos(ph) * th_dot
    r3 = np.cos(th) * (ft - ph_dot) + ph_dot
    return float(r1), float(r2), float(r3)


def closed_form_osc_R(f: TimeFunction, theta: TimeFunction, phi: TimeFunction,
                      t: float) -> tuple[float, float, float]:
    """Coefficients of H_-(t) over (K1, K2, K3); hyperbolic analog of the spin case."""
    th, ph = theta(t), phi(t)
    th_dot, ph_dot = theta.derivative()(t), phi.derivative()(t)
    ft = f(t)
    r1 = np.sinh(th) * np.cos(ph) * (ft - ph_dot) - np.sin(ph) * th_dot
    r2 = np.sinh(th) * np.sin(ph) * (ft - ph_dot) + np.cos(ph) * th_dot
    r3 = np.cosh(th) * (ft - ph_dot) + ph_dot
    return float(r1), float(r2), float(r3)


def precessing_special_case(f: TimeFunction, theta: float, omega: float,
                            t: float, b: float = 1.0) -> tuple[float, float, float]:
    """Field magnitude r and direction weights (f1, f2) for theta = const, phi = omega t.

    b * r * (f1 cos(omega t), f1 sin(omega t), f2) equals closed_form_spin_R.
    """
    ft = f(t)
    r1 = np.sin(theta) * (ft - omega)
    r3 = np.cos(theta) * (ft - omega) + omega
    br = float(np.hypot(r1, r3))
    r = br / b
    if br == 0.0:
        return 0.0, 0.0, 0.0
    return r, float(r1 / br), float(r3 / br)


def quadrupole_partner(spin: SpinRep, f: TimeFunction, g: TimeFunction,
                       theta: TimeFunction, phi: TimeFunction, t: float) -> Operator:
    """H'_-(t) = sum_i R^i J_i + g(t) (sum_i Rtilde^i J_i)^2 for Y = f J3 + g J3^2."""
    r1, r2, r3 = closed_form_spin_R(f, theta, phi, t)
    linear = (r1 * spin.J1.entries + r2 * spin.J2.entries + r3 * spin.J3.entries)
    th, ph = theta(t), phi(t)
    tilde = (np.sin(th) * np.cos(ph) * spin.J1.entries
             + np.sin(th) * np.sin(ph) * spin.J2.entries
             + np.cos(th) * spin.J3.entries)
    return Operator(linear + g(t) * (tilde @ tilde))


def spin_hamiltonian(rep: SpinRep, f: TimeFunction, theta: TimeFunction,
                     phi: TimeFunction) -> Callable[[float], Operator]:
    """Closed-form H_-(t) map over the spin generators."""
    def h(t: float) -> Operator:
        r1, r2, r3 = closed_form_spin_R(f, theta, phi, t)
        return Operator(r1 * rep.J1.entries + r2 * rep.J2.entries
                        + r3 * rep.J3.entries)
    return h


def oscillator_hamiltonian(rep: OscillatorRep, f: TimeFunction, theta: TimeFunction,
                           phi: TimeFunction) -> Callable[[float], Operator]:
    """Closed-form H_-(t) map over the su(1,1) generators."""
    def h(t: float) -> Operator:
        r1, r2, r3 = closed_form_osc_R(f, theta, phi, t)
        return Operator(r1 * rep.K1.entries + r2 * rep.K2.entries
                        + r3 * rep.K3.entries)
    return h
