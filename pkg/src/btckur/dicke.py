"""Collective spin algebra in the maximum-total-spin (Dicke) subspace.

The N-spin ensemble with permutation-symmetric dynamics lives in the
(N+1)-dimensional sector of total spin j = N/2.  The basis is |j, m> with
m = j, j-1, ..., -j stored in descending-m order, so |j, j> (all spins up)
is index 0 and collective decay moves probability toward the last index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class DickeSpace:
    """Maximum-spin subspace of N spin-1/2 particles."""

    n_spins: int

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError(f"need at least one spin, got N={self.n_spins}")

    @property
    def j(self) -> float:
        return self.n_spins / 2

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    def m_values(self) -> np.ndarray:
        """Sz eigenvalues in basis order: j, j-1, ..., -j."""
        return self.j - np.arange(self.dim)


@dataclass(frozen=True)
class CollectiveOperator:
    space: DickeSpace
    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class StateVector:
    space: DickeSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.space.dim,):
            raise ValueError(f"amplitude length {a.shape} does not match dim {self.space.dim}")
        nrm2 = float(np.sum(np.abs(a) ** 2))
        if abs(nrm2 - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: |psi|^2 = {nrm2}")
        object.__setattr__(self, "amplitudes", a)

    def density_matrix(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.space, np.outer(a, a.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    space: DickeSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix not Hermitian")
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"trace = {tr}, expected 1")
        if float(np.linalg.eigvalsh(m).min()) < -1e-8:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")
        object.__setattr__(self, "matrix", m)


def ladder_coefficients(space: DickeSpace) -> np.ndarray:
    """c[k] = <j, m_k - 1| S_- |j, m_k> = sqrt(j(j+1) - m_k(m_k - 1)).

    With descending-m ordering, (S- psi)[k+1] = c[k] psi[k]; the last
    entry is zero (S- annihilates |j, -j>).
    """
    j = space.j
    m = space.m_values()
    return np.sqrt(np.maximum(j * (j + 1) - m * (m - 1), 0.0))


def spsm_diagonal(space: DickeSpace) -> np.ndarray:
    """Diagonal of S+S- = j(j+1) I - Sz^2 + Sz."""
    j = space.j
    m = space.m_values()
    return j * (j + 1) - m**2 + m


@dataclass(frozen=True)
class SpinOperators:
    sx: CollectiveOperator
    sy: CollectiveOperator
    sz: CollectiveOperator
    sp: CollectiveOperator
    sm: CollectiveOperator


def build_operators(space: DickeSpace) -> SpinOperators:
    """Dense Sx, Sy, Sz, S+, S- with standard angular-momentum matrix elements."""
    dim = space.dim
    m = space.m_values()
    c = ladder_coefficients(space)

    sz = np.diag(m).astype(complex)
    sm = np.zeros((dim, dim), dtype=complex)
    sm[np.arange(1, dim), np.arange(dim - 1)] = c[:-1]
    sp = sm.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j

    return SpinOperators(
        sx=CollectiveOperator(space, sx, "Sx"),
        sy=CollectiveOperator(space, sy, "Sy"),
        sz=CollectiveOperator(space, sz, "Sz"),
        sp=CollectiveOperator(space, sp, "Sp"),
        sm=CollectiveOperator(space, sm, "Sm"),
    )


@lru_cache(maxsize=32)
def cached_operators(n_spins: int) -> SpinOperators:
    return build_operators(DickeSpace(n_spins))


def spin_coherent_state(space: DickeSpace, theta: float, phi: float) -> StateVector:
    """Spin coherent state exp[theta(e^{i phi}S- - e^{-i phi}S+)/2] |j, j>.

    Built from the closed-form binomial amplitudes
    c_k = sqrt(C(N, k)) cos(theta/2)^{N-k} sin(theta/2)^k e^{i k phi},
    evaluated in log space so large N does not overflow.
    """
    n = space.n_spins
    k = np.arange(space.dim)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    c, s = np.cos(theta / 2), np.sin(theta / 2)
    with np.errstate(divide="ignore"):
        log_c = np.where(np.abs(c) > 0, np.log(np.abs(c)), -np.inf)
        log_s = np.where(np.abs(s) > 0, np.log(np.abs(s)), -np.inf)
    # 0 * log(0) pairs (k = 0 or k = n at the poles) contribute nothing
    with np.errstate(invalid="ignore"):
        pow_c = np.where(n - k > 0, (n - k) * log_c, 0.0)
        pow_s = np.where(k > 0, k * log_s, 0.0)
    log_mag = 0.5 * log_binom + pow_c + pow_s
    mag = np.where(np.isneginf(log_mag), 0.0, np.exp(log_mag))
    # signs of cos/sin powers (theta outside [0, pi] is allowed)
    sign = np.sign(c) ** (n - k) * np.sign(s) ** k
    amps = mag * sign * np.exp(1j * k * phi)
    amps = amps / np.linalg.norm(amps)
    return StateVector(space, amps)


def _as_matrix(state) -> tuple[np.ndarray, bool]:
    if isinstance(state, StateVector):
        return state.amplitudes, True
    if isinstance(state, DensityMatrix):
        return state.matrix, False
    raise TypeError(f"unsupported state type {type(state)!r}")


def expectation(op: CollectiveOperator, state) -> complex:
    """<psi|O|psi> or Tr[O rho]."""
    if op.space != state.space:
        raise ValueError("operator and state live in different Dicke spaces")
    arr, pure = _as_matrix(state)
    if pure:
        val = np.vdot(arr, op.matrix @ arr)
    else:
        val = np.trace(op.matrix @ arr)
    return complex(val)


def covariance(a: CollectiveOperator, b: CollectiveOperator, state) -> complex:
    """<A B> - <A><B>, operator order preserved (generally complex)."""
    if a.space != b.space:
        raise ValueError("operators live in different Dicke spaces")
    ab = CollectiveOperator(a.space, a.matrix @ b.matrix)
    return expectation(ab, state) - expectation(a, state) * expectation(b, state)


def variance(op: CollectiveOperator, state) -> float:
    return float(np.real(covariance(op, op, state)))


def magnetization(state) -> np.ndarray:
    """(mx, my, mz) = 2 <S_xyz> / N."""
    ops = cached_operators(state.space.n_spins)
    half_n = state.space.n_spins / 2
    return np.array(
        [
            np.real(expectation(ops.sx, state)) / half_n,
            np.real(expectation(ops.sy, state)) / half_n,
            np.real(expectation(ops.sz, state)) / half_n,
        ]
    )
