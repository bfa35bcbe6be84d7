import math

import numpy as onp
import pytest
from numpy.testing import assert_allclose

from delaykit.approx import (ApproxConfig, LowpassLumped, approx_derivative, approx_kernel, approx_theta0,
                             approx_theta_lambda, error_sweep, lowpass_from_dict, lowpass_lumped,
                             lowpass_residual, measure_error, order_bound, phi_lambda, select_order,
                             theta0_nodes)
from delaykit.errors import CapacityError, DomainError, NotAchievedError
from delaykit.kernels import (ExpPolyTerm, FiniteKernel, PiecewiseKernel, StabilityClass, difference,
                              elementary_kernel, kernel_from_dict, kernel_to_dict, l1_norm, pieces_of)
from delaykit.laplace import decompose, numeric_laplace

rng = onp.random.RandomState(1)

E = math.e


def test_config_validation():
    assert ApproxConfig(order=7).theta0_order == 7
    with pytest.raises(DomainError):
        ApproxConfig(alpha=0.0)
    with pytest.raises(DomainError):
        ApproxConfig(order=0)
    with pytest.raises(DomainError):
        ApproxConfig(residual="pade")
    with pytest.raises(DomainError):
        ApproxConfig(target_eps=-1.0)


def test_theta0_nodes():
    assert theta0_nodes(1.0, 1.0, 5) == [0, 0, 1, 1, 1, 1]
    assert theta0_nodes(2.0, 1.0, 4) == [0, 1, 1, 1, 1]


def test_approx_theta0_first_order():
    app = approx_theta0(1.0, ApproxConfig(1.0, 1))
    assert len(app.kernel.terms) == 1
    term = app.kernel.terms[0]
    assert_allclose([term.coeff, term.lam], [1.0, -1.0], atol=1e-15)
    assert_allclose(app.measured_eps, 1 / E, atol=1e-8)


def test_approx_theta0_convergence():
    eps = [approx_theta0(1.0, ApproxConfig(1.0, n)).measured_eps for n in (2, 5, 10, 20, 40)]
    assert eps[-1] < eps[0]


@pytest.mark.parametrize('n', [20, 40])
def test_theta0_keeps_exact_coefficients(n):
    app = approx_theta0(1.0, ApproxConfig(1.0, n))
    assert all(t.exact is not None for t in app.kernel.terms)
    assert app.kernel.rounding_floor < 1e-12
    # Bernstein polynomials interpolate the end x = 1, i.e. t = 0
    assert_allclose(app.kernel(0.0), 1.0, atol=1e-12)
    assert 0 < app.measured_eps < 1 / E


def test_theta0_exact_coefficients_survive_json():
    app = approx_theta0(1.0, ApproxConfig(1.0, 40))
    back = kernel_from_dict(kernel_to_dict(app.kernel))
    assert back == app.kernel
    assert all(t.exact is not None for t in back.terms)
    t = onp.linspace(0.0, 1.0, 7)
    assert_allclose(back(t), app.kernel(t), atol=1e-12)


def test_theta0_transfer_matches_quadrature():
    app = approx_theta0(1.0, ApproxConfig(1.0, 40))
    assert_allclose(decompose(app.kernel).transfer(0.0), numeric_laplace(app.kernel, 0.0), atol=1e-8)
    assert_allclose(app.transfer(2j), numeric_laplace(app.kernel, 2j), atol=1e-8)


def test_literal_residual_at_high_order():
    app = approx_theta_lambda(1.0, 1.0, ApproxConfig(1.0, 40, residual="theta0"))
    assert app.kernel.stability is StabilityClass.STABLE
    assert app.kernel.rounding_floor < 1e-12
    assert_allclose(app.kernel(0.0), 1.0, atol=1e-10)
    assert math.isfinite(app.measured_eps)


def test_phi_lambda():
    assert_allclose(phi_lambda(1.0, 1.0, 1.0, 1.0), 1.0, rtol=1e-14)
    assert_allclose(phi_lambda(1.0, 1.0, 1.0, 0.0), E, rtol=1e-14)


@pytest.mark.parametrize('alpha', [1.0, 0.2])
def test_theta_lambda_convergence(alpha):
    eps5 = approx_theta_lambda(1.0, 1.0, ApproxConfig(alpha, 5)).measured_eps
    eps40 = approx_theta_lambda(1.0, 1.0, ApproxConfig(alpha, 40)).measured_eps
    assert eps40 < eps5 / 2
    assert eps40 < 0.2
    if alpha == 1.0:
        assert eps40 < eps5 / 3


@pytest.mark.parametrize('alpha', [1.0, 0.2])
@pytest.mark.parametrize('lam', [0.0, 2.0])
def test_theta_lambda_convergence_other_rates(lam, alpha):
    eps5 = approx_theta_lambda(lam, 1.0, ApproxConfig(alpha, 5)).measured_eps
    eps40 = approx_theta_lambda(lam, 1.0, ApproxConfig(alpha, 40)).measured_eps
    assert eps40 < eps5


@pytest.mark.parametrize('residual', ['shift', 'theta0'])
def test_approximant_is_stable(residual):
    cfg = ApproxConfig(1.0, 8, theta0_order=6, residual=residual)
    app = approx_theta_lambda(1.0 + 2j, 1.0, cfg)
    assert app.kernel.stability is StabilityClass.STABLE
    assert all(t.lam.real < 0 for t in app.kernel.terms)
    assert app.term_count <= cfg.order + cfg.theta0_order + 1
    assert_allclose(app.measured_eps, measure_error(app.kernel, elementary_kernel(1.0 + 2j, 1.0)), rtol=1e-6)


def test_theta0_residual_reduces_to_indicator():
    cfg = ApproxConfig(1.0, 12, residual="theta0")
    routed = approx_theta_lambda(0.0, 1.0, cfg)
    direct = approx_theta0(1.0, cfg)
    assert l1_norm(difference(routed.kernel, direct.kernel), 1e-13) < 1e-12


def test_stable_target_is_kept():
    app = approx_theta_lambda(-1.0, 1.0, ApproxConfig())
    assert app.measured_eps == 0.0
    assert app.kernel == elementary_kernel(-1.0, 1.0)


def test_capacity_error():
    with pytest.raises(CapacityError):
        approx_theta_lambda(1.0, 1.0, ApproxConfig(1.0, 1001))


@pytest.mark.parametrize('k', [1, 2, 3])
@pytest.mark.parametrize('theta', [0.5, 1.0])
def test_derivative_lift_transport(k, theta):
    base = approx_theta_lambda(1.0, theta, ApproxConfig(1.0, 10))
    lifted = approx_derivative(base, k)
    assert lifted.target.k == k
    assert lifted.measured_eps <= theta ** k * base.measured_eps + 1e-9
    assert_allclose(lifted.measured_eps, measure_error(lifted.kernel, elementary_kernel(1.0, theta, k)),
                    rtol=1e-6)


def test_derivative_lift_identity():
    base = approx_theta_lambda(1.0, 1.0, ApproxConfig(1.0, 6))
    assert approx_derivative(base, 0) is base
    with pytest.raises(DomainError):
        approx_derivative(approx_derivative(base, 1), 1)


def test_approx_kernel_single_component():
    cfg = ApproxConfig(1.0, 10)
    base = approx_theta_lambda(1.0, 1.0, cfg)
    app, bound = approx_kernel(decompose(elementary_kernel(1.0, 1.0)), cfg)
    t = onp.linspace(0, 1, 21)
    assert_allclose(app(t), base(t), rtol=1e-12, atol=1e-12)
    assert_allclose(bound, base.measured_eps, rtol=1e-12)
    assert_allclose(app.measured_eps, base.measured_eps, atol=1e-8)


def test_approx_kernel_lifted_component():
    cfg = ApproxConfig(1.0, 10)
    base = approx_theta_lambda(2.0, 1.0, cfg)
    app, bound = approx_kernel(decompose(FiniteKernel((ExpPolyTerm(1.0, 2.0, 1),), 0.0, 1.0)), cfg)
    assert_allclose(bound, base.measured_eps, rtol=1e-12)
    t = onp.linspace(0, 1, 21)
    assert_allclose(app(t), -approx_derivative(base, 1)(t), rtol=1e-10, atol=1e-10)
    assert app.measured_eps <= bound + 1e-9


def test_approx_kernel_delayed_component():
    cfg = ApproxConfig(1.0, 10)
    base = approx_theta_lambda(1.0, 1.0, cfg)
    app, bound = approx_kernel(decompose(FiniteKernel((ExpPolyTerm(1.0, 1.0),), 1.0, 2.0)), cfg)
    assert app.kernel.support == (1.0, 2.0)
    assert_allclose(bound, E * base.measured_eps, rtol=1e-12)
    t = onp.linspace(0, 1, 21)
    assert_allclose(app(t + 1.0), E * base(t), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize('seed', range(10))
def test_approx_kernel_bound(seed):
    r = onp.random.RandomState(300 + seed)
    terms = [ExpPolyTerm(r.randn(), r.uniform(0.0, 1.5), r.randint(0, 2)) for _ in range(2)]
    kernel = FiniteKernel(terms, 0.0, 1.0, real_valued=True)
    app, bound = approx_kernel(decompose(kernel), ApproxConfig(1.0, 10))
    assert app.kernel.stability is StabilityClass.STABLE
    assert app.measured_eps <= bound + 1e-8


def test_approx_kernel_two_delays():
    kernel = FiniteKernel((ExpPolyTerm(1.0, 1.0),), 0.0, 1.0)
    late = FiniteKernel((ExpPolyTerm(-0.5, 1.0),), 1.0, 2.0)
    app, bound = approx_kernel(decompose(PiecewiseKernel((kernel, late))), ApproxConfig(1.0, 10))
    assert len(pieces_of(app.kernel)) == 2
    assert app.measured_eps <= bound + 1e-8


def test_order_bound():
    assert order_bound(0.0, 1.0, 1.0, 0.1) == 1
    assert order_bound(1j, 1.0, 1.0, 0.1) == 1
    assert order_bound(1.0, 1.0, 1.0, 0.1) >= 10 ** 6
    beta = (E - 1) / (1 - 1 / E)
    assert_allclose(order_bound(1.0, 1.0, 1.0, 0.1), math.ceil(4 * beta ** 2 / 1e-3 * E ** 5), rtol=1e-9)
    with pytest.raises(DomainError):
        order_bound(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        order_bound(-1.0, 1.0, 1.0, 0.1)


def test_select_order():
    app = select_order(1.0, 1.0, 1.0, 0.5, 100)
    assert app.measured_eps <= 0.5
    if app.order > 1:
        assert approx_theta_lambda(1.0, 1.0, ApproxConfig(1.0, app.order - 1)).measured_eps > 0.5
    assert select_order(1.0, 1.0, 1.0, 10.0, 100).order == 1
    with pytest.raises(NotAchievedError) as info:
        select_order(1.0, 1.0, 1.0, 1e-9, 4)
    assert info.value.best is not None
    assert info.value.best.order <= 4


def test_error_sweep_is_ordered():
    orders = [3, 1, 2, 8]
    rows = error_sweep(1.0, 1.0, 1.0, orders, threads=3)
    assert [n for n, _ in rows] == orders
    serial = error_sweep(1.0, 1.0, 1.0, orders, threads=1)
    assert rows == serial
    assert rows[3][1] < rows[1][1]


def test_lowpass_single_tap():
    lam, theta, a = 1.0, 1.0, 10.0
    lumped = lowpass_lumped(lam, theta, a, 1)
    assert lumped.taps.times.tolist() == [0.0]
    grid = onp.linspace(0.0, theta + 5.0 / a, 10)
    design = onp.exp(-a * grid)
    target = onp.where(grid <= theta, onp.exp(lam * grid), 0.0)
    gamma = design @ target / (design @ design)
    assert_allclose(lumped.taps.weights[0].real, gamma, rtol=1e-10)
    assert_allclose(lumped.residual, lowpass_residual(lumped, lam, theta), rtol=1e-12)


@pytest.mark.slow
def test_lowpass_residual_shrinks_with_a():
    # taps spaced at half the filter time constant
    coarse = lowpass_lumped(0.0, 1.0, 10.0, 20)
    fine = lowpass_lumped(0.0, 1.0, 100.0, 200)
    assert fine.residual < coarse.residual


def test_lowpass_properness_and_json():
    lumped = lowpass_lumped(1.0 + 1j, 1.0, 20.0, 10)
    omegas = onp.logspace(-2, 4, 61)
    assert onp.all(onp.abs(lumped.transfer(1j * omegas)) <= lumped.gain_bound(omegas) * (1 + 1e-12))
    assert lumped.response(-0.1) == 0.0
    back = lowpass_from_dict(lumped.to_dict())
    assert_allclose(back.transfer(1j * omegas), lumped.transfer(1j * omegas), rtol=1e-14)
    with pytest.raises(DomainError):
        lowpass_from_dict({"a": 1.0})
    with pytest.raises(DomainError):
        LowpassLumped(-1.0, lumped.taps)
    with pytest.raises(DomainError):
        lowpass_lumped(1.0, 1.0, 10.0, 5, fit_grid=10)
