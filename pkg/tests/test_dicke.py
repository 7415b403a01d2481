"""Collective-spin algebra in the maximum-spin subspace."""

import numpy as np
import pytest

from btckur.dicke import (
    DickeSpace,
    DensityMatrix,
    StateVector,
    build_operators,
    cached_operators,
    covariance,
    expectation,
    magnetization,
    spin_coherent_state,
    spsm_diagonal,
    variance,
)

SIZES = [1, 2, 10, 40, 100]


def comm(a, b):
    return a @ b - b @ a


@pytest.mark.parametrize("n", SIZES)
def test_commutators(n):
    ops = build_operators(DickeSpace(n))
    sx, sy, sz = ops.sx.matrix, ops.sy.matrix, ops.sz.matrix
    assert np.allclose(comm(sx, sy), 1j * sz, atol=1e-8)
    assert np.allclose(comm(sy, sz), 1j * sx, atol=1e-8)
    assert np.allclose(comm(sz, sx), 1j * sy, atol=1e-8)


@pytest.mark.parametrize("n", SIZES)
def test_spsm_identity(n):
    ops = build_operators(DickeSpace(n))
    direct = ops.sp.matrix @ ops.sm.matrix
    assert np.allclose(direct, np.diag(spsm_diagonal(DickeSpace(n))), atol=1e-8)
    # S+S- = S^2 - Sz^2 + Sz with S^2 = j(j+1) Id
    j = n / 2
    s2 = j * (j + 1) * np.eye(n + 1)
    assert np.allclose(direct, s2 - ops.sz.matrix @ ops.sz.matrix + ops.sz.matrix, atol=1e-8)


@pytest.mark.parametrize("n", SIZES)
@pytest.mark.parametrize("angles", [(0.0, 0.0), (np.pi / 2, np.pi / 2), (1.0, 2.0), (np.pi, 0.3)])
def test_coherent_state_magnetization_and_variance(n, angles):
    theta, phi = angles
    s = spin_coherent_state(DickeSpace(n), theta, phi)
    m = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    assert np.allclose(magnetization(s), m, atol=1e-8)
    ops = build_operators(DickeSpace(n))
    for op, ma in zip((ops.sx, ops.sy, ops.sz), m):
        assert abs(variance(op, s) - n / 4 * (1 - ma**2)) < 1e-8


def test_coherent_state_spsm_expectation_bruteforce():
    # m = (0, 1, 0), N = 40: leading term N^2/4 = 400; exact value by matrices
    n = 40
    s = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)
    ops = build_operators(DickeSpace(n))
    spsm = ops.sp.matrix @ ops.sm.matrix
    exact = float(np.real(s.amplitudes.conj() @ spsm @ s.amplitudes))
    # product-state evaluation: N/2 + (N^2-N)/4 (mx^2+my^2) + N/2 mz = 410
    assert abs(exact - 410.0) < 1e-8
    # leading-order term N^2/4 (1 - mz^2) = 400
    assert abs(exact - 400.0) <= n / 4 * 2


def test_covariances_on_coherent_states():
    n = 12
    ops = build_operators(DickeSpace(n))
    s = spin_coherent_state(DickeSpace(n), np.pi / 2, np.pi / 2)  # m=(0,1,0)
    assert abs(covariance(ops.sx, ops.sx, s) - n / 4) < 1e-8
    s = spin_coherent_state(DickeSpace(n), 0.0, 0.0)  # m=(0,0,1)
    c = covariance(ops.sx, ops.sy, s)
    assert abs(c.real) < 1e-8
    assert abs(c.imag - n / 4) < 1e-8


def test_state_validation():
    sp = DickeSpace(4)
    with pytest.raises(ValueError):
        StateVector(sp, np.ones(5))  # unnormalized
    with pytest.raises(ValueError):
        StateVector(sp, np.zeros(3))  # wrong dim
    good = spin_coherent_state(sp, 0.3, 0.1)
    rho = good.density_matrix()
    assert isinstance(rho, DensityMatrix)
    with pytest.raises(ValueError):
        DensityMatrix(sp, np.eye(5) * (1 / 5.0) + 1j * np.triu(np.ones((5, 5)), 1))


def test_cached_operators_identity():
    assert cached_operators(8) is cached_operators(8)
