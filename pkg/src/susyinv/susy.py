"""Supercharges, even invariants on the doubled space, and spectral pairing.

The supercharge is the strictly lower-left block matrix built from d; the even
invariant has blocks d^dag d / 2 and d d^dag / 2, whose positive spectra agree
and whose eigenvectors map into each other through d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import Operator, cluster_indices, eigh, polar_unitary

ZERO_MODE_SCALE = 1e-9
PAIRING_TOL = 1e-10


class PairingAmbiguityError(ValueError):
    pass


@dataclass(frozen=True)
class SuperCharge:
    """Odd nilpotent block operator ((0, 0), (d, 0)) on the doubled space."""

    d: Operator
    Q: Operator

    @property
    def dim(self) -> int:
        return self.Q.dim


@dataclass(frozen=True)
class SuperInvariant:
    Iplus: Operator
    Iminus: Operator
    I: Operator
    d: Operator


@dataclass(frozen=True)
class SpectralPairing:
    """Matched positive levels of I+ and I- with per-level pairing unitaries."""

    shared_positive_values: tuple[float, ...]
    degeneracies: tuple[int, ...]
    plus_vectors: tuple[np.ndarray, ...]
    minus_vectors: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    kernel_dim_plus: int
    kernel_dim_minus: int


def build_supercharge(d: Operator) -> SuperCharge:
    """Embed d as the lower-left block; Q^2 = 0 holds exactly by shape."""
    if not isinstance(d, Operator):
        d = Operator(d)
    n = d.dim
    q = np.zeros((2 * n, 2 * n), dtype=complex)
    q[n:, :n] = d.entries
    return SuperCharge(d, Operator(q, grading=(n, n)))


def build_invariant(q: SuperCharge) -> SuperInvariant:
    d = q.d.entries
    iplus = d.conj().T @ d / 2
    iminus = d @ d.conj().T / 2
    n = d.shape[0]
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    block[:n, :n] = iplus
    block[n:, n:] = iminus
    return SuperInvariant(Operator(iplus), Operator(iminus),
                          Operator(block, grading=(n, n)), q.d)


@dataclass(frozen=True)
class SuperalgebraReport:
    nilpotency: float
    invariance: float
    closure: float

    def max_residual(self) -> float:
        return max(self.nilpotency, self.invariance, self.closure)


def check_superalgebra(q: SuperCharge, inv: SuperInvariant) -> SuperalgebraReport:
    """Residual norms of Q^2 = 0, [Q, I] = 0, and {Q, Q^dag} = 2I."""
    qm, im = q.Q.entries, inv.I.entries
    nilpotency = float(np.linalg.norm(qm @ qm))
    invariance = float(np.linalg.norm(qm @ im - im @ qm))
    closure = float(np.linalg.norm(qm @ qm.conj().T + qm.conj().T @ qm - 2 * im))
    return SuperalgebraReport(nilpotency, invariance, closure)


def _split_kernel(es, zero_tol: float):
    """Indices of kernel and positive eigenvalues, with ambiguity guard."""
    values = es.values
    kernel = np.flatnonzero(values < zero_tol)
    positive = np.flatnonzero(values >= zero_tol)
    if positive.size:
        smallest = values[positive[0]]
        if smallest < 10 * zero_tol:
            raise PairingAmbiguityError(
                f"eigenvalue {smallest:.3e} is too close to the zero-mode threshold "
                f"{zero_tol:.3e}: candidate kernel dims {kernel.size} or {kernel.size + 1}")
    return kernel, positive


def pair_spectra(inv: SuperInvariant) -> SpectralPairing:
    """Match positive levels across the grading and compute pairing unitaries.

    Each v is the unitary polar factor of the overlap matrix
    <minus| d |plus> / sqrt(2 lam), which is unitary up to rounding whenever
    the two frames span matching eigenspaces.
    """
    es_plus = eigh(inv.Iplus)
    es_minus = eigh(inv.Iminus)
    scale = max(1.0, inv.I.norm())
    zero_tol = ZERO_MODE_SCALE * scale
    kernel_p, pos_p = _split_kernel(es_plus, zero_tol)
    kernel_m, pos_m = _split_kernel(es_minus, zero_tol)
    if pos_p.size != pos_m.size:
        raise ValueError(
            f"positive spectra differ in size: {pos_p.size} (I+) vs {pos_m.size} (I-)")

    vals_p = es_plus.values[pos_p]
    vals_m = es_minus.values[pos_m]
    gap = max(np.abs(np.concatenate([vals_p, vals_m, [0.0]]))).item()
    groups = cluster_indices(vals_p, 1e-8 * max(1.0, gap))

    d = inv.d.entries
    levels, degs, plus_vecs, minus_vecs, pairings = [], [], [], [], []
    cursor = 0
    for group in groups:
        idx_p = pos_p[list(group)]
        idx_m = pos_m[cursor:cursor + len(group)]
        cursor += len(group)
        lam_p = float(es_plus.values[idx_p].mean())
        lam_m = float(es_minus.values[idx_m].mean())
        if abs(lam_p - lam_m) > 1e-8 * max(1.0, lam_p):
            raise ValueError(
                f"positive level {lam_p:.12g} of I+ has no partner in I- "
                f"(nearest {lam_m:.12g})")
        vp = es_plus.vectors[:, idx_p]
        vm = es_minus.vectors[:, idx_m]
        overlap = vm.conj().T @ d @ vp / np.sqrt(2 * lam_p)
        v = polar_unitary(overlap)
        residual = float(np.linalg.norm(d @ vp - np.sqrt(2 * lam_p) * vm @ v))
        if residual > PAIRING_TOL * max(1.0, np.sqrt(2 * lam_p)):
            raise ValueError(
                f"pairing relation failed at level {lam_p:.12g}: residual {residual:.3e}")
        levels.append(lam_p)
        degs.append(len(group))
        plus_vecs.append(vp)
        minus_vecs.append(vm)
        pairings.append(v)

    return SpectralPairing(tuple(levels), tuple(degs), tuple(plus_vecs),
                           tuple(minus_vecs), tuple(pairings),
                           int(kernel_p.size), int(kernel_m.size))


def susy_map_state(d: Operator, lam: float, psi_plus: np.ndarray,
                   tol: float = 1e-8) -> np.ndarray:
    """Map a positive-level eigenvector of I+ to its I- partner via d/sqrt(2 lam)."""
    dm = d.entries if isinstance(d, Operator) else np.asarray(d, dtype=complex)
    psi = np.asarray(psi_plus, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(dm)) ** 2 / 2)
    if lam <= ZERO_MODE_SCALE * scale:
        raise ValueError(f"zero modes have no superpartner (lambda={lam:.3e})")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError("psi_plus must be normalized")
    iplus = dm.conj().T @ dm / 2
    if np.linalg.norm(iplus @ psi - lam * psi) > tol * max(1.0, lam):
        raise ValueError(f"psi_plus is not an eigenvector of I+ with eigenvalue {lam}")
    out = dm @ psi / np.sqrt(2 * lam)
    iminus = dm @ dm.conj().T / 2
    if abs(np.linalg.norm(out) - 1.0) > tol or \
            np.linalg.norm(iminus @ out - lam * out) > tol * max(1.0, lam):
        raise ValueError("mapped state failed the I- eigenvector post-check")
    return out
