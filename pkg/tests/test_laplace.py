import math

import numpy as onp
import pytest
from numpy.testing import assert_allclose

from delaykit.errors import DomainError, RangeError
from delaykit.kernels import ExpPolyTerm, FiniteKernel, elementary_kernel, shift_support
from delaykit.laplace import (Decomposition, ElementaryComponent, FrequencyGrid, decompose, frequency_response,
                              numeric_laplace, theta_hat, theta_hat_mp, transfer_eval, write_bode_csv)
from delaykit.utilities.precision import context, to_complex

from kernel_tools import random_kernel, random_rhp_points

rng = onp.random.RandomState(1)

E = math.e


@pytest.mark.parametrize('k', range(5))
@pytest.mark.parametrize('theta', [0.5, 1.0])
@pytest.mark.parametrize('lam', [0.0, 1.0, 2 + 3j])
def test_theta_hat_at_lambda(lam, theta, k):
    expected = (-1) ** k * theta ** (k + 1) / (k + 1)
    assert_allclose(complex(theta_hat(lam, theta, k, lam)), expected, rtol=1e-12)
    ctx = context(30)
    assert_allclose(to_complex(theta_hat_mp(ctx, lam, theta, k, lam)), expected, rtol=1e-12)


def test_theta_hat_values():
    assert_allclose(complex(theta_hat(0.0, 1.0, 0, 0.0)), 1.0, rtol=1e-14)
    assert_allclose(complex(theta_hat(1.0, 1.0, 0, 2.0)), 1 - 1 / E, atol=1e-10)
    assert_allclose(complex(theta_hat(1.0, 1.0, 0, 0.0)), E - 1, rtol=1e-13)
    s = onp.array([[0.0, 1j], [2.0, 5 - 5j]])
    assert onp.asarray(theta_hat(1.0, 1.0, 2, s)).shape == (2, 2)
    with pytest.raises(DomainError):
        theta_hat(1.0, 0.0, 0, 1.0)
    with pytest.raises(DomainError):
        theta_hat(1.0, 1.0, -1, 1.0)


def test_theta_hat_branch_continuity():
    ctx = context(40)
    for _ in range(100):
        lam = complex(rng.uniform(-2, 2), rng.uniform(-3, 3))
        theta = rng.uniform(0.5, 2.0)
        k = rng.randint(0, 5)
        direction = onp.exp(1j * rng.uniform(0, 2 * math.pi))
        for radius in (0.049, 0.051):
            s = lam + radius / theta * direction
            exact = to_complex(theta_hat_mp(ctx, lam, theta, k, s))
            assert_allclose(complex(theta_hat(lam, theta, k, s)), exact, rtol=1e-10)


@pytest.mark.parametrize('k', [0, 1, 3])
def test_theta_hat_closed_form(k):
    ctx = context(40)
    lam, theta = 0.5 - 1j, 1.0
    s = lam + onp.exp(1j * rng.uniform(0, 2 * math.pi, 20)) * rng.uniform(1.0, 10.0, 20)
    values = onp.asarray(theta_hat(lam, theta, k, s))
    exact = [to_complex(theta_hat_mp(ctx, lam, theta, k, sv)) for sv in s]
    assert_allclose(values, exact, rtol=1e-9)


def test_decompose_examples():
    dec = decompose(elementary_kernel(2.0, 1.0))
    assert dec.theta == 1.0
    assert dec.components == (ElementaryComponent(2.0, 0, ((0.0, 1.0),)),)

    dec = decompose(FiniteKernel((ExpPolyTerm(1.0, 2.0, 1),), 0.0, 1.0))
    assert len(dec.components) == 1
    comp = dec.components[0]
    assert (comp.lam, comp.k) == (2.0, 1)
    assert_allclose(comp.weight[0][1], -1.0)

    dec = decompose(FiniteKernel((ExpPolyTerm(1.0, 1.0),), 1.0, 2.0))
    comp = dec.components[0]
    assert (comp.lam, comp.k) == (1.0, 0)
    assert comp.weight[0][0] == 1.0
    assert_allclose(comp.weight[0][1], E, rtol=1e-14)
    t = onp.linspace(0, 3, 31)
    assert_allclose(dec.evaluate(t), onp.where((t >= 1) & (t <= 2), onp.exp(t), 0.0), rtol=1e-13)


@pytest.mark.parametrize('seed', range(20))
def test_decompose_reconstruction(seed):
    k = random_kernel(onp.random.RandomState(seed))
    dec = decompose(k)
    t = onp.linspace(0, k.support_end, 101)
    expected = k(t)
    scale = onp.max(onp.abs(expected))
    assert_allclose(dec.evaluate(t), expected, rtol=1e-10, atol=1e-10 * scale)
    # the rebuilt support end may round one ulp below the original
    back = dec.to_kernel()
    assert_allclose(back(t[:-1]), expected[:-1], rtol=1e-10, atol=1e-10 * scale)


def test_transfer_examples():
    theta1 = decompose(elementary_kernel(1.0, 1.0))
    assert_allclose(transfer_eval(theta1, 1.0), 1.0, rtol=1e-13)
    assert_allclose(transfer_eval(theta1, 0.0), E - 1, rtol=1e-13)
    late = decompose(FiniteKernel((ExpPolyTerm(1.0, 1.0),), 1.0, 2.0))
    assert_allclose(transfer_eval(late, 0.0), E ** 2 - E, rtol=1e-12)
    assert_allclose(late.transfer(onp.array([0.0, 1.0])), [E ** 2 - E, 1.0], rtol=1e-12)


def test_transfer_range_error():
    late = decompose(shift_support(elementary_kernel(1.0, 1.0), 1.0))
    with pytest.raises(RangeError):
        transfer_eval(late, -1000.0)


@pytest.mark.parametrize('seed', range(10))
def test_transfer_matches_quadrature(seed):
    r = onp.random.RandomState(100 + seed)
    k = random_kernel(r)
    dec = decompose(k)
    for s in random_rhp_points(r, 20):
        assert abs(transfer_eval(dec, s) - numeric_laplace(k, s, 1e-10)) < 1e-8


def test_numeric_laplace():
    assert_allclose(numeric_laplace(elementary_kernel(0.0, 1.0), 0.0), 1.0, atol=1e-10)
    assert_allclose(numeric_laplace(elementary_kernel(1.0, 1.0), 2.0), 1 - 1 / E, atol=1e-10)


@pytest.mark.parametrize('seed', range(5))
def test_strictly_proper(seed):
    r = onp.random.RandomState(200 + seed)
    lam, theta = complex(r.uniform(-2, 2), r.uniform(-3, 3)), r.uniform(0.5, 2.0)
    omegas = onp.logspace(2, 6, 41)
    values = onp.abs(transfer_eval(decompose(elementary_kernel(lam, theta)), 1j * omegas))
    envelope = (1 + math.exp(lam.real * theta)) / onp.abs(1j * omegas - lam)
    assert onp.all(values <= envelope * (1 + 1e-9))
    assert values[-1] < 1e-4


def test_frequency_response():
    theta0 = decompose(elementary_kernel(0.0, 1.0))
    point = frequency_response(theta0, FrequencyGrid((0.0,)))[0]
    assert_allclose(point.value, 1.0, rtol=1e-14)
    assert abs(point.magnitude_db) < 1e-12
    point = frequency_response(decompose(elementary_kernel(1.0, 1.0)), FrequencyGrid((0.0,)))[0]
    assert_allclose(point.magnitude_db, 20 * math.log10(E - 1), rtol=1e-12)

    dec = decompose(FiniteKernel((ExpPolyTerm(0.5 + 1j, -1.0 + 2j, 2),), 0.3, 1.1))
    point = frequency_response(dec, FrequencyGrid((3.7,)))[0]
    assert_allclose(point.value, transfer_eval(dec, 3.7j), rtol=1e-14)


def test_frequency_grid_and_csv(tmp_path):
    grid = FrequencyGrid.logspace(1e-2, 1e3, 50)
    assert len(grid) == 251
    assert_allclose([grid.omegas[0], grid.omegas[-1]], [1e-2, 1e3], rtol=1e-12)
    with pytest.raises(DomainError):
        FrequencyGrid((1.0, 0.5))
    with pytest.raises(DomainError):
        FrequencyGrid.logspace(1.0, 0.1)

    points = frequency_response(decompose(elementary_kernel(1.0, 1.0)), grid)
    phases = onp.array([p.phase_rad for p in points])
    assert onp.all(onp.abs(onp.diff(phases)) < math.pi), "phase is unwrapped"
    path = tmp_path / "bode.csv"
    write_bode_csv(str(path), points)
    lines = path.read_text().splitlines()
    assert lines[0] == "omega,re,im,mag_db,phase_rad"
    assert len(lines) == len(grid) + 1
    data = onp.loadtxt(str(path), delimiter=",", skiprows=1)
    assert_allclose(data[0, 3], 20 * math.log10(E - 1), atol=1e-3)


def test_decomposition_validation():
    with pytest.raises(DomainError):
        Decomposition(0.0, ())
    with pytest.raises(DomainError):
        ElementaryComponent(1.0, 0, ((1.0, 1.0), (0.5, 1.0)))
    with pytest.raises(DomainError):
        decompose(FiniteKernel((), 0.0, 1.0))
