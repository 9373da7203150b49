"""Dense complex operator algebra: the substrate every other module builds on.

Conventions: the unqualified norm is Frobenius everywhere; eigenvalue
degeneracies are clustered with an absolute gap of ``1e-8 * max(1, ||A||)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

HERMITICITY_RTOL = 1e-10
CLUSTER_GAP_SCALE = 1e-8


class DimensionMismatchError(ValueError):
    pass


class NonHermitianError(ValueError):
    def __init__(self, defect: float):
        super().__init__(f"matrix is not Hermitian (relative defect {defect:.3e})")
        self.defect = defect


def _square_complex(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class Operator:
    """Immutable dense complex square matrix with optional Z2 block grading.

    ``grading = (n_plus, n_minus)`` splits the space into a bosonic block of
    size ``n_plus`` followed by a fermionic block of size ``n_minus``.
    """

    entries: np.ndarray
    grading: tuple[int, int] | None = None

    def __post_init__(self):
        m = _square_complex(self.entries)
        if self.grading is not None:
            n_plus, n_minus = self.grading
            if n_plus < 0 or n_minus < 0 or n_plus + n_minus != m.shape[0]:
                raise ValueError(
                    f"grading {self.grading} does not split dimension {m.shape[0]}"
                )
            object.__setattr__(self, "grading", (int(n_plus), int(n_minus)))
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T, self.grading)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.entries - self.entries.conj().T))

    def is_hermitian(self, rtol: float = HERMITICITY_RTOL) -> bool:
        return self.hermiticity_defect() <= rtol * max(1.0, self.norm())

    def block(self, row: int, col: int) -> np.ndarray:
        """Return one of the four grading blocks (0 = bosonic, 1 = fermionic)."""
        if self.grading is None:
            raise ValueError("operator carries no grading")
        n_plus = self.grading[0]
        sl = (slice(None, n_plus), slice(n_plus, None))
        return self.entries[sl[row], sl[col]]

    def even_defect(self) -> float:
        """Norm of the off-diagonal blocks; ~0 for grading-preserving operators."""
        return float(np.hypot(np.linalg.norm(self.block(0, 1)),
                              np.linalg.norm(self.block(1, 0))))

    def odd_defect(self) -> float:
        """Norm of the diagonal blocks; ~0 for grading-flipping operators."""
        return float(np.hypot(np.linalg.norm(self.block(0, 0)),
                              np.linalg.norm(self.block(1, 1))))

    def _shared_grading(self, other: "Operator") -> tuple[int, int] | None:
        if isinstance(other, Operator) and self.grading == other.grading:
            return self.grading
        return None

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.dim != self.dim:
                raise DimensionMismatchError(
                    f"dimension mismatch: {self.dim} vs {other.dim}")
            return Operator(self.entries @ other.entries, self._shared_grading(other))
        return self.entries @ other

    def __rmatmul__(self, other):
        return other @ self.entries

    def __add__(self, other: "Operator") -> "Operator":
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Operator(self.entries + other.entries, self._shared_grading(other))

    def __sub__(self, other: "Operator") -> "Operator":
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Operator(self.entries - other.entries, self._shared_grading(other))

    def __neg__(self) -> "Operator":
        return Operator(-self.entries, self.grading)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.entries * complex(scalar), self.grading)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return Operator(self.entries / complex(scalar), self.grading)


def identity(dim: int, grading: tuple[int, int] | None = None) -> Operator:
    return Operator(np.eye(dim, dtype=complex), grading)


def _mat(a) -> np.ndarray:
    """Accept an Operator or a raw array; return the ndarray."""
    return a.entries if isinstance(a, Operator) else np.asarray(a, dtype=complex)


def commutator(a: Operator, b: Operator) -> Operator:
    """AB - BA."""
    ma, mb = _mat(a), _mat(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return Operator(ma @ mb - mb @ ma)


def anticommutator(a: Operator, b: Operator) -> Operator:
    """AB + BA."""
    ma, mb = _mat(a), _mat(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return Operator(ma @ mb + mb @ ma)


def expm(a: Operator) -> Operator:
    """Matrix exponential (scaling-and-squaring via scipy)."""
    m = _mat(a)
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix exponential of non-finite entries")
    return Operator(scipy.linalg.expm(m),
                    a.grading if isinstance(a, Operator) else None)


def unitarity_defect(u: Operator) -> float:
    """Frobenius norm of U^dag U - 1."""
    m = _mat(u)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


def cluster_indices(values: np.ndarray, gap: float) -> tuple[tuple[int, ...], ...]:
    """Group indices of ascending real values whose consecutive gaps are < gap."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] < gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues, unitary column eigenvectors, degeneracy clusters."""

    values: np.ndarray
    vectors: np.ndarray
    degeneracy_groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def group_values(self) -> np.ndarray:
        """Representative (mean) eigenvalue per degeneracy group."""
        return np.array([self.values[list(g)].mean() for g in self.degeneracy_groups])


def eigh(a: Operator, cluster_scale: float = CLUSTER_GAP_SCALE) -> EigenSystem:
    """Hermitian eigendecomposition with degeneracy clustering.

    Rejects inputs whose relative Hermiticity defect exceeds ``1e-10``.
    """
    m = _mat(a)
    scale = max(1.0, float(np.linalg.norm(m)))
    defect = float(np.linalg.norm(m - m.conj().T))
    if defect > HERMITICITY_RTOL * scale:
        raise NonHermitianError(defect / scale)
    values, vectors = np.linalg.eigh(m)
    groups = cluster_indices(values, cluster_scale * scale)
    return EigenSystem(values, vectors, groups)


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition M = U P (via SVD)."""
    u, _, vh = np.linalg.svd(np.asarray(m, dtype=complex))
    return u @ vh


def expm_i_hermitian(h: np.ndarray, tau: float) -> np.ndarray:
    """exp(-1j * tau * H) for Hermitian H, unitary to rounding.

    Uses the spectral decomposition; diagonal H short-circuits to phases.
    """
    h = np.asarray(h, dtype=complex)
    if not np.any(h[~np.eye(h.shape[0], dtype=bool)]):
        return np.diag(np.exp(-1j * tau * np.real(np.diag(h))))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T
