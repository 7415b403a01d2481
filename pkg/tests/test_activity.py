"""Activities and precision bounds: oracles, limits, orderings."""

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from btckur import activity, lindblad, meanfield
from btckur.dicke import DickeSpace, build_operators, spin_coherent_state, variance


def mf_traj(omega, m0=(0, 1, 0), tau=10.0, dt=1e-3, n=40, kappa=1.0):
    p = meanfield.ModelParams(omega=omega, kappa=kappa, n_spins=n, tau=tau, dt=dt)
    traj = meanfield.integrate_mean_field(m0, p)
    return meanfield.fundamental_propagator(traj, p), p


def test_classical_activity_fixed_point_slope():
    # at the stationary state, A grows linearly with rate kappa N/2 (1 - mz^2)
    traj, p = mf_traj(0.5, m0=(0, 0, 1), tau=60.0)
    a = activity.classical_activity_mf(traj, p)
    mz2 = 1 - 0.25  # fixed point mz^2 = 1 - (omega/kappa)^2
    rate = 0.5 * p.kappa * p.n_spins * (1 - mz2)
    slope = (a[-1] - a[traj.index_of(50.0)]) / 10.0
    assert abs(slope - rate) < 1e-6 * rate


def test_b_mb_brute_force_double_integral():
    """The factorized nested evaluation equals an explicit O(G^2) double
    trapezoid with the propagator formed independently for each pair."""
    traj, p = mf_traj(1.5, tau=3.0, dt=1e-3)
    got = activity.b_mb(traj, p)

    step = 30
    idx = np.arange(0, len(traj.times), step)
    ts = traj.times[idx]
    w, k = p.omega, p.kappa
    inner = np.zeros(len(ts))
    for i1, g1 in enumerate(idx):
        vals = np.zeros(i1 + 1)
        for i2, g2 in enumerate(idx[: i1 + 1]):
            u = meanfield.propagator(traj, ts[i1], ts[i2])
            mx, my, mz = traj.m[g2]
            m = traj.m[g2]
            delta = np.array([1.0, 0.0, 0.0])
            vals[i2] = w * float(u[0] @ (delta - mx * m)) + k * mz * (
                my * u[0, 0] - mx * u[0, 1]
            )
        inner[i1] = np.trapezoid(vals, ts[: i1 + 1])
    quantum = 2 * p.n_spins * w * cumulative_trapezoid(inner, ts, initial=0.0)
    brute = activity.classical_activity_mf(traj, p)[idx] + quantum
    assert np.max(np.abs(brute - got[idx])) < 2e-3 * max(1.0, got[-1])


def test_b_mb_critical_point_equality():
    # m0 = (0,1,0) is the critical fixed point: B_mb == B_mb_ub(nested)
    # analytically (m_x = m_z = 0, U_xx = 1 for all pairs)
    traj, p = mf_traj(1.0, tau=5.0)
    bmb = activity.b_mb(traj, p)
    bub = activity.b_mb_ub(traj, p, "nested")
    assert np.max(np.abs(bmb - bub)) < 1e-8 * bub[-1]
    # closed form: A = kappa N/2 tau, quantum = N omega^2 tau^2
    i = traj.index_of(5.0)
    assert abs(bmb[i] - (0.5 * p.kappa * p.n_spins * 5.0 + p.n_spins * 5.0**2)) < 1e-6 * bmb[i]


def test_bub_nested_below_product():
    for omega in (0.5, 1.0, 1.5):
        traj, p = mf_traj(omega, tau=10.0)
        bn = activity.b_mb_ub(traj, p, "nested")
        bp = activity.b_mb_ub(traj, p, "product")
        assert np.all(bn <= bp * (1 + 1e-12))
    with pytest.raises(ValueError):
        activity.b_mb_ub(traj, p, "diagonal")


def test_exact_omega_zero_collapses_to_classical():
    n = 10
    p = meanfield.ModelParams(omega=0.0, kappa=1.0, n_spins=n, tau=5.0, dt=1e-3)
    ctx = lindblad.make_context(p)
    psi0 = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
    res = activity.exact_activity(ctx, psi0, 5.0, spacing=0.1)
    assert np.allclose(res.j0, res.a, rtol=1e-6, atol=1e-9)


def test_exact_unitary_limit():
    n = 10
    kappa = 1e-6
    p = meanfield.ModelParams(omega=1.0, kappa=kappa, n_spins=n, tau=3.0, dt=1e-3)
    ctx = lindblad.make_context(p)
    psi0 = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
    res = activity.exact_activity(ctx, psi0, 3.0, spacing=0.05)
    ops = build_operators(DickeSpace(n))
    var_h = p.omega**2 * variance(ops.sx, psi0)
    want = 4 * res.taus**2 * var_h
    mask = res.taus > 0
    assert np.max(np.abs(res.j0[mask] - want[mask]) / want[mask]) < 1e-3


def test_exact_j0_below_jub():
    n = 12
    p = meanfield.ModelParams(omega=1.5, kappa=1.0, n_spins=n, tau=6.0, dt=1e-3)
    ctx = lindblad.make_context(p)
    psi0 = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
    res = activity.exact_activity(ctx, psi0, 6.0, spacing=0.05)
    assert np.all(res.j0 <= res.jub * (1 + 1e-9) + 1e-9)


def test_exact_n_limit_guard():
    p = meanfield.ModelParams(omega=1.0, kappa=1.0, n_spins=80, tau=1.0, dt=1e-3)
    ctx = lindblad.make_context(p)
    psi0 = spin_coherent_state(DickeSpace(80), 0.0, 0.0)
    with pytest.raises(ValueError):
        activity.exact_activity(ctx, psi0, 1.0)


def test_grid_refinement_bmb():
    vals = []
    for dt in (2e-3, 1e-3):
        traj, p = mf_traj(1.5, tau=10.0, dt=dt)
        vals.append(activity.b_mb(traj, p)[-1])
    assert abs(vals[0] - vals[1]) < 1e-3 * abs(vals[1])


def test_exact_j0_matches_fidelity_oracle():
    """Independent oracle: J0 is the quantum Fisher information of the
    trajectory ensemble under a global time rescaling.  Scaling H by
    (1 + eps) and the jump rate by (1 + eps) tilts the no-jump/jump
    Kraus pair; the overlap of the tilted and untilted trajectory states
    evolves under a two-sided generator on the operator space, and
    4 (1 - |overlap|^2) / eps^2 converges to J0 as eps -> 0.
    """
    from scipy.linalg import expm

    n, w, kap, tau = 8, 0.5, 1.0, 5.0
    p = meanfield.ModelParams(omega=w, kappa=kap, n_spins=n, tau=tau, dt=1e-3)
    ctx = lindblad.make_context(p)
    d = ctx.space.dim
    eye = np.eye(d)

    def tilted_overlap(eps):
        left = lambda a: np.kron(a, eye)       # row-major vec: vec(AX)
        right = lambda a: np.kron(eye, a.T)    # vec(XA)
        g = (-1j * (1 + eps)) * left(ctx.h) + 1j * right(ctx.h)
        g = g + np.sqrt(1 + eps) * ctx.gamma * np.kron(ctx.sm, ctx.sm.conj())
        g = g - 0.5 * (1 + eps) * ctx.gamma * left(ctx.spsm)
        g = g - 0.5 * ctx.gamma * right(ctx.spsm)
        psi0 = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
        x0 = psi0.density_matrix().matrix.reshape(-1)
        return np.trace((expm(g * tau) @ x0).reshape(d, d))

    estimates = []
    for eps in (2e-3, 1e-3):
        estimates.append(4.0 * (1.0 - abs(tilted_overlap(eps)) ** 2) / eps**2)
    # leading error is linear in eps: extrapolate eps -> 0
    oracle = 2.0 * estimates[1] - estimates[0]

    psi0 = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
    res = activity.exact_activity(ctx, psi0, tau, spacing=0.01, compute_jub=False)
    assert abs(res.j0[-1] - oracle) < 2e-3 * abs(oracle)
