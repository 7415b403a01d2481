"""Mean-field magnetization flow and its linearized 3x3 propagator.

The magnetization m = (mx, my, mz) obeys

    dmx/dt = kappa mx mz
    dmy/dt = -omega mz + kappa my mz
    dmz/dt = omega my - kappa (1 - mz^2)

which conserves |m| = 1.  The linearization around the flow is generated
by the 3x3 matrix K(t); the time-ordered propagator U(s1, s2) is obtained
from the fundamental solution M(t) (dM/dt = K(t) M, M(0) = I) as
U(s1, s2) = M(s1) M(s2)^{-1}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

DET_WARN_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """Rates in units where kappa carries the time scale."""

    omega: float
    kappa: float
    n_spins: int
    tau: float
    dt: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")


def check_unit_norm(m, tol: float = 1e-6) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValueError("magnetization must have three components")
    if abs(m @ m - 1.0) > tol:
        raise ValueError(f"|m|^2 = {m @ m}, expected 1")
    return m


@dataclass(frozen=True)
class MeanFieldTrajectory:
    times: np.ndarray            # strictly increasing, times[0] = 0
    m: np.ndarray                # (G, 3)
    params: ModelParams
    fundamental: np.ndarray | None = None   # (G, 3, 3), fundamental[0] = I

    def index_of(self, t: float) -> int:
        """Grid index of time t; off-grid times are rejected (no interpolation)."""
        dt = self.params.dt
        k = int(round(t / dt))
        if k < 0 or k >= len(self.times) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
            raise ValueError(f"time {t} is not a grid node")
        return k


def mf_rhs(m, p: ModelParams) -> np.ndarray:
    mx, my, mz = m
    w, k = p.omega, p.kappa
    return np.array([k * mx * mz, -w * mz + k * my * mz, w * my - k * (1.0 - mz * mz)])


def generator_K(m, p: ModelParams) -> np.ndarray:
    """Linearized generator; trace = 2 kappa mz."""
    mx, my, mz = m
    w, k = p.omega, p.kappa
    return np.array(
        [
            [k * mz, 0.0, k * mx],
            [0.0, k * mz, k * my - w],
            [-2.0 * k * mx, -2.0 * k * my + w, 0.0],
        ]
    )


def _rk4_path(m0, p: ModelParams, with_fundamental: bool):
    """Fixed-step classical RK4 on the (m, M) augmented system.

    The propagator stages reuse the RK stage values of m so both variables
    share the same 4th-order discretization.
    """
    dt = p.dt
    n_steps = int(round(p.tau / dt))
    times = dt * np.arange(n_steps + 1)

    ms = np.empty((n_steps + 1, 3))
    ms[0] = m0
    fund = None
    if with_fundamental:
        fund = np.empty((n_steps + 1, 3, 3))
        fund[0] = np.eye(3)

    m = np.asarray(m0, dtype=float)
    M = np.eye(3)
    for i in range(n_steps):
        k1 = mf_rhs(m, p)
        m2 = m + 0.5 * dt * k1
        k2 = mf_rhs(m2, p)
        m3 = m + 0.5 * dt * k2
        k3 = mf_rhs(m3, p)
        m4 = m + dt * k3
        k4 = mf_rhs(m4, p)
        if with_fundamental:
            f1 = generator_K(m, p) @ M
            f2 = generator_K(m2, p) @ (M + 0.5 * dt * f1)
            f3 = generator_K(m3, p) @ (M + 0.5 * dt * f2)
            f4 = generator_K(m4, p) @ (M + dt * f3)
            M = M + (dt / 6.0) * (f1 + 2 * f2 + 2 * f3 + f4)
            fund[i + 1] = M
        m = m + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ms[i + 1] = m

    return times, ms, fund


def integrate_mean_field(m0, p: ModelParams) -> MeanFieldTrajectory:
    """Integrate the magnetization flow on the fixed grid of spacing dt."""
    m0 = check_unit_norm(m0)
    if p.tau > 0 and p.dt > p.tau:
        raise ValueError(f"dt = {p.dt} exceeds tau = {p.tau}")
    times, ms, _ = _rk4_path(m0, p, with_fundamental=False)
    return MeanFieldTrajectory(times=times, m=ms, params=p)


def fundamental_propagator(traj: MeanFieldTrajectory, p: ModelParams) -> MeanFieldTrajectory:
    """Fill the fundamental solution M(t) = U(t, 0) on the trajectory grid."""
    times, ms, fund = _rk4_path(traj.m[0], p, with_fundamental=True)
    if len(times) != len(traj.times):
        raise ValueError("trajectory grid does not match params")
    return MeanFieldTrajectory(times=times, m=ms, params=p, fundamental=fund)


def inv3(a: np.ndarray, warn: bool = True) -> np.ndarray:
    """Closed-form adjugate inverse of a 3x3 matrix (batched over leading axes)."""
    a = np.asarray(a, dtype=float)
    adj = np.empty_like(a)
    adj[..., 0, 0] = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    adj[..., 0, 1] = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
    adj[..., 0, 2] = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    adj[..., 1, 0] = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
    adj[..., 1, 1] = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
    adj[..., 1, 2] = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
    adj[..., 2, 0] = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
    adj[..., 2, 1] = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
    adj[..., 2, 2] = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    det = (
        a[..., 0, 0] * adj[..., 0, 0]
        + a[..., 0, 1] * adj[..., 1, 0]
        + a[..., 0, 2] * adj[..., 2, 0]
    )
    if warn and np.min(np.abs(det)) < DET_WARN_THRESHOLD:
        warnings.warn(
            f"fundamental propagator near-singular: min |det M| = {np.min(np.abs(det)):.3e}",
            RuntimeWarning,
        )
    return adj / det[..., None, None]


def propagator(traj: MeanFieldTrajectory, s1: float, s2: float) -> np.ndarray:
    """Two-point propagator U(s1, s2) = M(s1) M(s2)^{-1}, grid nodes only."""
    if traj.fundamental is None:
        raise ValueError("trajectory has no cached fundamental propagator")
    if not (0.0 <= s2 <= s1):
        raise ValueError(f"need 0 <= s2 <= s1, got s1={s1}, s2={s2}")
    i1, i2 = traj.index_of(s1), traj.index_of(s2)
    return traj.fundamental[i1] @ inv3(traj.fundamental[i2])


def find_period(traj: MeanFieldTrajectory, delta: float = 1e-4, t_min: float = 0.5) -> float | None:
    """Smallest grid time t > t_min at which m(t) re-enters the delta-ball
    around m(0) after having left it; None if no revisit is found."""
    d = np.linalg.norm(traj.m - traj.m[0], axis=1)
    left = np.nonzero(d > 10 * delta)[0]
    if len(left) == 0:
        return None
    start = max(left[0], traj.index_of(min(t_min, traj.times[-1])))
    back = np.nonzero(d[start:] < delta)[0]
    if len(back) == 0:
        return None
    return float(traj.times[start + back[0]])
