"""Quantum-jump Monte Carlo unraveling on pure Dicke-subspace states.

Fixed-dt Bernoulli sampling of the two Kraus branches:

    M0 = I - i H_eff dt   (no jump, renormalized)
    M1 = sqrt(2 kappa dt / N) S-   (jump, renormalized)

Per-trajectory randomness comes from a counter-based scheme: trajectory i
of an ensemble uses a Philox stream keyed by the first 64-bit word of
SeedSequence(master_seed, spawn_key=(i,)), so results are independent of
execution order and thread count.  The batched kernel and the single
trajectory path share the same per-step arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .dicke import StateVector
from .lindblad import LiouvillianContext

P1_LIMIT = 0.05


def trajectory_seed(master_seed: int, index: int) -> int:
    """64-bit per-trajectory seed derived from the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def default_jump_dt(params) -> float:
    """Keeps the worst-case p1 = kappa N dt / 2 at one percent."""
    return min(0.02 / (params.kappa * params.n_spins), 1e-3 / params.kappa)


@njit(cache=True)
def _one_step(psi, u, c, d, omega, kon, dt):
    """Advance one trajectory by dt in place; returns (jumped, error).

    error = 1 flags p1 >= 0.05 (dt too coarse).  kon = kappa / N.
    """
    dim = psi.shape[0]
    ss = 0.0
    for k in range(dim):
        ss += d[k] * (psi[k].real * psi[k].real + psi[k].imag * psi[k].imag)
    p1 = 2.0 * kon * dt * ss
    if p1 >= P1_LIMIT:
        return 0, 1
    if u < p1:
        # jump: psi <- S- psi / ||S- psi||, with ||S- psi||^2 = ss
        inv = 1.0 / np.sqrt(ss)
        for k in range(dim - 1, 0, -1):
            psi[k] = c[k - 1] * psi[k - 1] * inv
        psi[0] = 0.0
        return 1, 0
    # no jump: psi <- (I - i H_eff dt) psi, renormalized
    out = np.empty(dim, dtype=np.complex128)
    for k in range(dim):
        sx = 0.0 + 0.0j
        if k + 1 < dim:
            sx += c[k] * psi[k + 1]
        if k > 0:
            sx += c[k - 1] * psi[k - 1]
        out[k] = psi[k] - 1j * dt * omega * 0.5 * sx - dt * kon * d[k] * psi[k]
    nrm = 0.0
    for k in range(dim):
        nrm += out[k].real * out[k].real + out[k].imag * out[k].imag
    inv = 1.0 / np.sqrt(nrm)
    for k in range(dim):
        psi[k] = out[k] * inv
    return 0, 0


@njit(cache=True, parallel=True)
def _segment_batch(psi, draws, c, d, omega, kon, dt, counts, errors):
    n_traj, n_steps = draws.shape
    for i in prange(n_traj):
        if errors[i]:
            continue
        for s in range(n_steps):
            jumped, err = _one_step(psi[i], draws[i, s], c, d, omega, kon, dt)
            if err:
                errors[i] = 1
                break
            counts[i] += jumped


@njit(cache=True)
def _segment_record(psi, draws, c, d, omega, kon, dt, step_offset, jump_steps, state):
    """Scalar variant recording jump step indices.  state = [n_jumps, error]."""
    n_steps = draws.shape[0]
    for s in range(n_steps):
        jumped, err = _one_step(psi, draws[s], c, d, omega, kon, dt)
        if err:
            state[1] = 1
            return
        if jumped:
            if state[0] < jump_steps.shape[0]:
                jump_steps[state[0]] = step_offset + s
            state[0] += 1


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    jump_times: np.ndarray
    checkpoint_times: np.ndarray
    counts_at_checkpoints: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    n_traj: int
    checkpoint_times: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    se_mean: np.ndarray
    se_var: np.ndarray          # delete-1 jackknife
    counts: np.ndarray | None   # (C, n_traj) raw counts if kept
    magnetization: np.ndarray | None = None   # (C, 3) ensemble mean, if tracked


def _checkpoint_steps(tau: float, dt: float, checkpoints) -> np.ndarray:
    steps = np.round(np.asarray(checkpoints, dtype=float) / dt).astype(np.int64)
    n_total = int(round(tau / dt))
    steps = steps[(steps > 0) & (steps <= n_total)]
    return np.unique(steps)


def jump_step(state: StateVector, ctx: LiouvillianContext, dt: float, random_draw: float):
    """Single stochastic step; returns (new_state, jumped)."""
    psi = state.amplitudes.copy()
    jumped, err = _one_step(
        psi, float(random_draw), ctx.ladder, ctx.spsm_diag,
        ctx.params.omega, ctx.params.kappa / ctx.params.n_spins, dt,
    )
    if err:
        raise ValueError(f"jump probability exceeds {P1_LIMIT}; dt = {dt} too coarse")
    return StateVector(ctx.space, psi), bool(jumped)


def run_trajectory(
    psi0: StateVector,
    ctx: LiouvillianContext,
    tau: float,
    dt: float,
    checkpoints,
    seed: int,
) -> TrajectoryRecord:
    """One trajectory, deterministic given (seed, dt, checkpoints)."""
    p = ctx.params
    kon = p.kappa / p.n_spins
    ck_steps = _checkpoint_steps(tau, dt, checkpoints)
    gen = _generator(seed)

    cap = max(256, int(3.0 * p.kappa * p.n_spins * tau) + 64)
    psi = psi0.amplitudes.astype(np.complex128).copy()
    while True:
        jump_steps = np.empty(cap, dtype=np.int64)
        state = np.zeros(2, dtype=np.int64)
        work = psi.copy()
        g = _generator(seed)
        counts = np.empty(len(ck_steps), dtype=np.int64)
        prev = 0
        for ci, cs in enumerate(ck_steps):
            draws = g.random(int(cs - prev))
            _segment_record(work, draws, ctx.ladder, ctx.spsm_diag,
                            p.omega, kon, dt, prev, jump_steps, state)
            if state[1]:
                raise ValueError(f"jump probability exceeds {P1_LIMIT}; dt = {dt} too coarse")
            counts[ci] = state[0]
            prev = int(cs)
        if state[0] <= cap:
            break
        cap = int(2 * state[0])

    jump_times = dt * (jump_steps[: state[0]].astype(float) + 1.0)
    return TrajectoryRecord(
        seed=seed,
        jump_times=jump_times,
        checkpoint_times=dt * ck_steps.astype(float),
        counts_at_checkpoints=counts,
    )


def _jackknife_se_var(x: np.ndarray) -> float:
    """Standard error of the sample variance by delete-1 jackknife."""
    n = len(x)
    if n < 3:
        return float("nan")
    mu = x.mean()
    dev2 = (x - mu) ** 2
    ss = dev2.sum()
    ss_i = ss - dev2 * n / (n - 1)
    var_i = ss_i / (n - 2)
    return float(np.sqrt((n - 1) / n * np.sum((var_i - var_i.mean()) ** 2)))


def run_ensemble(
    psi0: StateVector,
    ctx: LiouvillianContext,
    tau: float,
    dt: float,
    checkpoints,
    n_traj: int,
    master_seed: int,
    keep_counts: bool = False,
    track_magnetization: bool = False,
) -> EnsembleStats:
    """Batched ensemble; statistics are determined by (master_seed, dt, n_traj)."""
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    p = ctx.params
    kon = p.kappa / p.n_spins
    ck_steps = _checkpoint_steps(tau, dt, checkpoints)

    gens = [_generator(trajectory_seed(master_seed, i)) for i in range(n_traj)]
    psi = np.broadcast_to(psi0.amplitudes, (n_traj, ctx.space.dim)).astype(np.complex128).copy()
    jump_counts = np.zeros(n_traj, dtype=np.int64)
    errors = np.zeros(n_traj, dtype=np.int64)
    counts = np.empty((len(ck_steps), n_traj), dtype=np.int64)
    mags = np.empty((len(ck_steps), 3)) if track_magnetization else None

    prev = 0
    for ci, cs in enumerate(ck_steps):
        n_seg = int(cs - prev)
        draws = np.empty((n_traj, n_seg))
        for i, g in enumerate(gens):
            draws[i] = g.random(n_seg)
        _segment_batch(psi, draws, ctx.ladder, ctx.spsm_diag,
                       p.omega, kon, dt, jump_counts, errors)
        if errors.any():
            raise ValueError(f"jump probability exceeds {P1_LIMIT}; dt = {dt} too coarse")
        counts[ci] = jump_counts
        if track_magnetization:
            mags[ci] = _batch_magnetization(psi, ctx)
        prev = int(cs)

    x = counts.astype(float)
    mean = x.mean(axis=1)
    var = x.var(axis=1, ddof=1)
    se_mean = np.sqrt(var / n_traj)
    se_var = np.array([_jackknife_se_var(row) for row in x])
    return EnsembleStats(
        n_traj=n_traj,
        checkpoint_times=dt * ck_steps.astype(float),
        mean=mean,
        var=var,
        se_mean=se_mean,
        se_var=se_var,
        counts=counts if keep_counts else None,
        magnetization=mags,
    )


def _batch_magnetization(psi: np.ndarray, ctx: LiouvillianContext) -> np.ndarray:
    """Ensemble-averaged (mx, my, mz) from a batch of pure states."""
    c = ctx.ladder
    m = ctx.space.m_values()
    half_n = ctx.space.n_spins / 2.0
    abs2 = np.abs(psi) ** 2
    sz = np.sum(abs2 * m, axis=1)
    # <S-> = sum_k c[k] conj(psi[k+1]) psi[k]
    sminus = np.sum(c[:-1] * np.conj(psi[:, 1:]) * psi[:, :-1], axis=1)
    sx = np.real(sminus)
    sy = -np.imag(sminus)
    return np.array([sx.mean(), sy.mean(), sz.mean()]) / half_n
