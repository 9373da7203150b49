"""Concrete generator matrices: spin-j su(2), truncated-Fock su(1,1), so(5) quadrupole.

Spin matrices are exact. Oscillator operators live in a truncated Fock space;
the top ``buffer`` states are declared untrusted and every oscillator-family
check projects onto the interior below them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .operators import Operator


def _check_half_integer(j: float) -> int:
    two_j = round(2 * j)
    if two_j < 0 or abs(2 * j - two_j) > 1e-12:
        raise ValueError(f"j must be a nonnegative half-integer, got {j}")
    return two_j


@dataclass(frozen=True)
class SpinRep:
    """Spin-j angular momentum matrices in the basis m = j, j-1, ..., -j."""

    j: float
    J1: Operator
    J2: Operator
    J3: Operator
    Jplus: Operator
    Jminus: Operator
    Jsquared: Operator

    @property
    def dim(self) -> int:
        return self.J3.dim

    def m_values(self) -> np.ndarray:
        return self.j - np.arange(self.dim)

    def basis_state(self, m: float) -> np.ndarray:
        """Unit vector |j, m>."""
        k = round(self.j - m)
        if abs(self.j - m - k) > 1e-12 or not 0 <= k < self.dim:
            raise ValueError(f"m={m} is not a magnetic quantum number for j={self.j}")
        e = np.zeros(self.dim, dtype=complex)
        e[k] = 1.0
        return e


def make_spin(j: float) -> SpinRep:
    """Build the spin-j representation; raising acts as
    J+|j,m> = sqrt((j-m)(j+m+1)) |j,m+1>."""
    two_j = _check_half_integer(j)
    j = two_j / 2
    dim = two_j + 1
    m = j - np.arange(dim)
    jplus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        jplus[k - 1, k] = np.sqrt((j - m[k]) * (j + m[k] + 1))
    jminus = jplus.conj().T
    j1 = (jplus + jminus) / 2
    j2 = (jplus - jminus) / 2j
    j3 = np.diag(m).astype(complex)
    jsq = j1 @ j1 + j2 @ j2 + j3 @ j3
    return SpinRep(j, Operator(j1), Operator(j2), Operator(j3),
                   Operator(jplus), Operator(jminus), Operator(jsq))


@dataclass(frozen=True)
class OscillatorRep:
    """Truncated harmonic-oscillator operators with an untrusted edge buffer.

    All quadratics (x^2, K_i, ...) are products of the truncated x and p, so
    the canonical relations hold only on the interior block of size N - buffer.
    """

    N: int
    buffer: int
    a: Operator
    adag: Operator
    x: Operator
    p: Operator
    K1: Operator
    K2: Operator
    K3: Operator
    projector_interior: Operator

    @property
    def dim(self) -> int:
        return self.N

    @property
    def interior_dim(self) -> int:
        return self.N - self.buffer

    def number_op(self) -> Operator:
        return self.adag @ self.a

    def hamiltonian_plus(self) -> Operator:
        """H = a^dag a + 1/2, the unit oscillator."""
        return Operator(self.adag.entries @ self.a.entries
                        + 0.5 * np.eye(self.N))

    def project_interior(self, m: Operator | np.ndarray) -> np.ndarray:
        p = self.projector_interior.entries
        m = m.entries if isinstance(m, Operator) else np.asarray(m)
        return p @ m @ p


def default_buffer(n: int) -> int:
    return max(4, n // 8)


def make_oscillator(N: int, buffer: int | None = None) -> OscillatorRep:
    """Truncated Fock-space ladder, quadrature, and su(1,1) operators."""
    if N < 8:
        raise ValueError(f"truncation dimension must be >= 8, got {N}")
    if buffer is None:
        buffer = default_buffer(N)
    if not 1 <= buffer <= N // 4:
        raise ValueError(f"buffer must satisfy 1 <= buffer <= N/4, got {buffer}")
    a = np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)
    adag = a.conj().T
    x = (a + adag) / np.sqrt(2)
    p = 1j * (adag - a) / np.sqrt(2)
    k1 = (x @ x - p @ p) / 4
    k2 = -(x @ p + p @ x) / 4
    k3 = (x @ x + p @ p) / 4
    proj = np.diag((np.arange(N) < N - buffer).astype(complex))
    return OscillatorRep(N, buffer, Operator(a), Operator(adag), Operator(x),
                         Operator(p), Operator(k1), Operator(k2), Operator(k3),
                         Operator(proj))


def hermite_state(osc: OscillatorRep, n: int) -> np.ndarray:
    """Fock coordinates of the n-th number state; edge states are rejected."""
    if not 0 <= n < osc.N - osc.buffer:
        raise ValueError(
            f"n={n} lies in the untrusted edge zone (interior is n < {osc.N - osc.buffer})")
    e = np.zeros(osc.N, dtype=complex)
    e[n] = 1.0
    return e


@dataclass(frozen=True)
class QuadrupoleBasis:
    """Traceless quadrupole operators e_0..e_4 and their commutator table."""

    parent: SpinRep
    e: tuple[Operator, Operator, Operator, Operator, Operator]
    T: tuple[tuple[Operator, ...], ...]

    def e_alpha(self, alpha: int) -> Operator:
        return self.e[alpha]


def make_quadrupole(spin: SpinRep) -> QuadrupoleBasis:
    """Quadrupole basis over a spin rep; degenerate (scalar) for j = 1/2."""
    if spin.j < 1:
        warnings.warn(
            f"quadrupole operators are trivial for j={spin.j} (scalars at j=1/2)",
            stacklevel=2)
    j1, j2, j3 = spin.J1.entries, spin.J2.entries, spin.J3.entries
    jsq = spin.Jsquared.entries
    s3 = np.sqrt(3)
    e = (
        Operator(j3 @ j3 - jsq / 3),
        Operator((j1 @ j3 + j3 @ j1) / s3),
        Operator((j2 @ j3 + j3 @ j2) / s3),
        Operator((j1 @ j1 - j2 @ j2) / s3),
        Operator((j1 @ j2 + j2 @ j1) / s3),
    )
    table = tuple(
        tuple(Operator(e[a].entries @ e[b].entries - e[b].entries @ e[a].entries)
              for b in range(5))
        for a in range(5)
    )
    return QuadrupoleBasis(spin, e, table)
