"""Dynamical-activity quantities and the analytical precision bounds.

Mean-field side (arbitrary N, magnetization trajectory only):

  * classical activity  A(tau) = (kappa N / 2) integral (1 - mz^2)
  * B_mb(tau): classical term plus the coherent double integral built from
    the linearized propagator U(s1, s2)
  * B_mb_ub(tau): classical term plus the nested (default) or product form
    of the standard-deviation bound with F_S, F_eff

Exact side (finite N, Dicke subspace):

  * A(tau), the exact activity J0(tau) and its upper bound Jub(tau),
    propagated with a dense superoperator matrix exponential so that one
    grid step is a single matrix-vector product.

All time integrals use the trapezoidal rule on the stated grid.  The
double integral in B_mb collapses to nested single integrals because the
integrand factorizes as row_x[M(s1)] . (M(s2)^{-1} v(s2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import expm

from .dicke import StateVector
from .lindblad import LiouvillianContext, liouvillian_matrix
from .meanfield import MeanFieldTrajectory, ModelParams, inv3

EXACT_N_LIMIT = 60


def classical_activity_mf(traj: MeanFieldTrajectory, p: ModelParams) -> np.ndarray:
    """A(tau) on the trajectory grid."""
    mz = traj.m[:, 2]
    integrand = 0.5 * p.kappa * p.n_spins * (1.0 - mz**2)
    return cumulative_trapezoid(integrand, traj.times, initial=0.0)


def b_mb(traj: MeanFieldTrajectory, p: ModelParams) -> np.ndarray:
    """Many-body quantum dynamical activity B_mb(tau) on the trajectory grid."""
    if traj.fundamental is None:
        raise ValueError("trajectory needs the cached fundamental propagator")
    w, k = p.omega, p.kappa
    mx, my, mz = traj.m[:, 0], traj.m[:, 1], traj.m[:, 2]

    # v_alpha(s2) = omega (delta_{x alpha} - mx m_alpha) + kappa mz (my, -mx, 0)
    v = np.empty_like(traj.m)
    v[:, 0] = w * (1.0 - mx * mx) + k * mz * my
    v[:, 1] = -w * mx * my - k * mz * mx
    v[:, 2] = -w * mx * mz

    minv = inv3(traj.fundamental)
    q = np.einsum("gij,gj->gi", minv, v)
    big_q = cumulative_trapezoid(q, traj.times, axis=0, initial=0.0)
    r = traj.fundamental[:, 0, :]
    inner = np.einsum("gi,gi->g", r, big_q)
    quantum = 2.0 * p.n_spins * w * cumulative_trapezoid(inner, traj.times, initial=0.0)
    return classical_activity_mf(traj, p) + quantum


def fluctuation_factors(traj: MeanFieldTrajectory, p: ModelParams):
    """F_S and F_eff along the trajectory."""
    mx, mz = traj.m[:, 0], traj.m[:, 2]
    f_s = p.omega * np.sqrt(np.clip(1.0 - mx**2, 0.0, None))
    f_eff = f_s + p.kappa * np.abs(mz) * np.sqrt(np.clip(1.0 - mz**2, 0.0, None))
    return f_s, f_eff


def b_mb_ub(traj: MeanFieldTrajectory, p: ModelParams, form: str = "nested") -> np.ndarray:
    """Upper bound on B_mb; 'nested' (triangular, tighter) or 'product'."""
    f_s, f_eff = fluctuation_factors(traj, p)
    int_eff = cumulative_trapezoid(f_eff, traj.times, initial=0.0)
    if form == "nested":
        quantum = cumulative_trapezoid(f_s * int_eff, traj.times, initial=0.0)
    elif form == "product":
        quantum = cumulative_trapezoid(f_s, traj.times, initial=0.0) * int_eff
    else:
        raise ValueError(f"unknown form {form!r}; expected 'nested' or 'product'")
    return classical_activity_mf(traj, p) + 2.0 * p.n_spins * quantum


def _sigma(moment2: float, mean_abs2: float) -> float:
    """sqrt of a variance radicand, clipping small negative float noise."""
    rad = moment2 - mean_abs2
    tol = 1e-10 * max(1.0, abs(moment2))
    if rad < -tol:
        raise FloatingPointError(f"variance radicand {rad} below tolerance")
    return float(np.sqrt(max(rad, 0.0)))


@dataclass(frozen=True)
class ExactActivity:
    taus: np.ndarray
    a: np.ndarray
    j0: np.ndarray | None
    jub: np.ndarray | None


def exact_activity(
    ctx: LiouvillianContext,
    psi0: StateVector,
    tau: float,
    spacing: float = 0.05,
    compute_j0: bool = True,
    compute_jub: bool = True,
    n_limit: int = EXACT_N_LIMIT,
) -> ExactActivity:
    """Exact A(tau), J0(tau), Jub(tau) on the grid tau_k = k * spacing.

    The Lindblad generator is exponentiated once (dense dim^2 x dim^2
    matrix); stepping any vectorized operator from one grid node to the
    next is then a single matrix-vector product with no time-step error.
    The J0 inner trace Tr[H_eff^dag Htilde(s1-s2) rho(s2)] is evaluated by
    forward-evolving rho(s2) H_eff^dag (trace duality), carrying all s2
    columns at once.
    """
    p = ctx.params
    if p.n_spins > n_limit:
        raise ValueError(
            f"exact activity limited to N <= {n_limit}; got N = {p.n_spins} "
            "(the dense superoperator grows as (N+1)^4)"
        )
    d = ctx.space.dim
    n_nodes = int(round(tau / spacing)) + 1
    taus = spacing * np.arange(n_nodes)

    lmat = liouvillian_matrix(ctx)
    prop = expm(lmat * spacing)

    heff_dag = ctx.h_eff.conj().T
    hvec = ctx.h.T.reshape(-1)
    rates = np.empty(n_nodes)
    e_h = np.empty(n_nodes)
    sig_h = np.empty(n_nodes)
    sig_heff = np.empty(n_nodes)
    h2 = ctx.h @ ctx.h
    heff_sq = heff_dag @ ctx.h_eff

    x = psi0.density_matrix().matrix.reshape(-1).astype(complex)
    g = np.zeros((n_nodes, n_nodes)) if compute_j0 else None
    y = np.empty((d * d, n_nodes), dtype=complex) if compute_j0 else None

    for k in range(n_nodes):
        rho = x.reshape(d, d)
        tr = np.real(np.trace(rho))
        if abs(tr - 1.0) > 1e-6:
            raise FloatingPointError(f"trace drift {tr - 1.0:.3e} in exact propagation")
        diag = np.real(np.diagonal(rho))
        rates[k] = ctx.gamma * float(np.sum(ctx.spsm_diag * diag))
        e_h[k] = float(np.real(np.trace(ctx.h @ rho)))
        if compute_jub:
            sig_h[k] = _sigma(float(np.real(np.trace(h2 @ rho))), e_h[k] ** 2)
            mean_heff = complex(np.trace(ctx.h_eff @ rho))
            sig_heff[k] = _sigma(float(np.real(np.trace(heff_sq @ rho))), abs(mean_heff) ** 2)
        if compute_j0:
            y[:, k] = (rho @ heff_dag).reshape(-1)
            g[k, : k + 1] = np.real(hvec @ y[:, : k + 1])
        if k + 1 < n_nodes:
            x = prop @ x
            if compute_j0:
                y[:, : k + 1] = prop @ y[:, : k + 1]

    a = cumulative_trapezoid(rates, taus, initial=0.0)

    j0 = None
    if compute_j0:
        inner = np.empty(n_nodes)
        inner[0] = 0.0
        for k in range(1, n_nodes):
            row = g[k, : k + 1]
            inner[k] = spacing * (row.sum() - 0.5 * (row[0] + row[k]))
        int_h = cumulative_trapezoid(e_h, taus, initial=0.0)
        j0 = a + 8.0 * cumulative_trapezoid(inner, taus, initial=0.0) - 4.0 * int_h**2

    jub = None
    if compute_jub:
        int_eff = cumulative_trapezoid(sig_heff, taus, initial=0.0)
        jub = a + 8.0 * cumulative_trapezoid(sig_h * int_eff, taus, initial=0.0)

    return ExactActivity(taus=taus, a=a, j0=j0, jub=jub)


@dataclass(frozen=True)
class BoundsReport:
    """Time series of activity quantities on a shared tau grid."""

    taus: np.ndarray
    a: np.ndarray | None
    j0: np.ndarray | None
    jub: np.ndarray | None
    bmb: np.ndarray | None
    bmb_ub_nested: np.ndarray | None
    bmb_ub_product: np.ndarray | None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("a", "j0", "jub", "bmb", "bmb_ub_nested", "bmb_ub_product"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != len(self.taus):
                raise ValueError(f"{name} length does not match tau grid")
