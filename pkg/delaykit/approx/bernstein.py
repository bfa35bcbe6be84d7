"""
Stable approximants of elementary distributed delays built from Bernstein
polynomials after the change of variables x = exp(-alpha t).

On [0, theta] the map t -> x sends the support to [x0, 1] with
x0 = exp(-alpha theta). A Bernstein polynomial of the transformed target in
mu = (x - x0) / (1 - x0) is a polynomial in x, i.e. a sum of the stable
exponentials exp(-alpha i t).

Two residual strategies are offered for theta_lam with Re lam >= 0:

  * "shift" approximates exp((lam + alpha) t) and multiplies the result by
    exp(-alpha t), so every term decays and no constant is left over,
  * "theta0" approximates exp(lam t) directly and re-approximates the
    constant term by the Bernstein approximant of the indicator theta_0.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as onp
from scipy.special import gammaln

from ..errors import CapacityError, DomainError
from ..kernels.base import (ExpPolyTerm, FiniteKernel, KernelLike, PiecewiseKernel, StabilityClass,
                            coalesce, derivative_lift, difference, elementary_kernel, pieces_of,
                            shift_support)
from ..kernels.io import kernel_to_dict
from ..kernels.quadrature import l1_norm
from ..laplace.transfer import Decomposition, decompose
from ..utilities import defaults
from ..utilities.precision import context

logger = logging.getLogger(__name__)

RESIDUALS = ("shift", "theta0")


@dataclass(frozen=True)
class ApproxConfig:
    """
    alpha is the decay rate of the stable basis exp(-alpha i t); order is
    the Bernstein degree n; theta0_order the degree used for the indicator
    residual (defaults to order).
    """
    alpha: float = 1.0
    order: int = 10
    theta0_order: Optional[int] = None
    target_eps: Optional[float] = None
    residual: str = "shift"

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError("alpha must be positive and finite, got %r" % (self.alpha,))
        if int(self.order) != self.order or self.order < 1:
            raise DomainError("order must be a positive integer, got %r" % (self.order,))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "order", int(self.order))
        if self.theta0_order is None:
            object.__setattr__(self, "theta0_order", self.order)
        elif int(self.theta0_order) != self.theta0_order or self.theta0_order < 1:
            raise DomainError("theta0_order must be a positive integer, got %r" % (self.theta0_order,))
        else:
            object.__setattr__(self, "theta0_order", int(self.theta0_order))
        if self.target_eps is not None and not self.target_eps > 0:
            raise DomainError("target_eps must be positive, got %r" % (self.target_eps,))
        if self.residual not in RESIDUALS:
            raise DomainError("residual must be one of %s, got %r" % (RESIDUALS, self.residual))


@dataclass(frozen=True)
class ApproxTarget:
    """theta_lam^k on [0, theta], or a general kernel when lam is None."""
    theta: float
    lam: Optional[complex] = None
    k: int = 0

    @property
    def is_elementary(self) -> bool:
        return self.lam is not None

    def kernel(self) -> FiniteKernel:
        if not self.is_elementary:
            raise DomainError("a general kernel target has no elementary form")
        return elementary_kernel(self.lam, self.theta, self.k)


@dataclass(frozen=True)
class Approximant:
    kernel: KernelLike
    config: ApproxConfig
    measured_eps: float
    target: ApproxTarget

    def __post_init__(self):
        if not (math.isfinite(self.measured_eps) and self.measured_eps >= 0):
            raise DomainError("measured_eps must be finite and nonnegative, got %r" % (self.measured_eps,))
        if self.kernel.stability is not StabilityClass.STABLE:
            raise DomainError("approximant kernels must only contain decaying terms")

    @property
    def order(self) -> int:
        return self.config.order

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @property
    def term_count(self) -> int:
        return sum(len(p.terms) for p in pieces_of(self.kernel))

    @cached_property
    def decomposition(self) -> Decomposition:
        return decompose(self.kernel)

    def __call__(self, t):
        return self.kernel(t)

    def transfer(self, s):
        return self.decomposition.transfer(s)

    def to_dict(self) -> Dict[str, Any]:
        data = kernel_to_dict(self.kernel)
        data.update(alpha=self.alpha, order=self.order, measured_eps=self.measured_eps)
        return data


def _check_order(n: int):
    if n > defaults.max_binomial_order():
        raise CapacityError("order %d exceeds the binomial range of %d"
                            % (n, defaults.max_binomial_order()))


def _coefficient_digits(n: int, x0: float, log10_peak: float) -> int:
    """Working digits that keep the expansion exact to ~20 digits past its largest term."""
    j = onp.arange(n + 1)
    log10_binom = float(onp.max(gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1))) / math.log(10)
    h = 1.0 / (1.0 - x0)
    digits = (n * math.log10(2.0) + log10_binom + n * math.log10(h * (1.0 + x0))
              + max(log10_peak, 0.0) + 20)
    digits = int(math.ceil(digits))
    if digits > defaults.max_working_digits():
        raise CapacityError("coefficient expansion needs %d digits (cap %d)"
                            % (digits, defaults.max_working_digits()))
    return digits


def power_coefficients(ctx, values: List, x0) -> List:
    """Coefficients of x**i of sum_k C(n,k) values[k] mu**k (1-mu)**(n-k), mu = (x-x0)/(1-x0).

    The Bernstein form is first turned into the power basis of mu by forward
    differences, then Taylor-shifted to x. Arithmetic happens in `ctx`.
    """
    n = len(values) - 1
    diffs = list(values)
    mono = []
    for j in range(n + 1):
        mono.append(ctx.binomial(n, j) * diffs[0])
        diffs = [b - a for a, b in zip(diffs[:-1], diffs[1:])]
    h = 1 / (1 - x0)
    h_pow = [h ** j for j in range(n + 1)]
    x0_pow = [(-x0) ** m for m in range(n + 1)]
    coeffs = []
    for i in range(n + 1):
        acc = ctx.mpc(0)
        for j in range(i, n + 1):
            acc += mono[j] * h_pow[j] * ctx.binomial(j, i) * x0_pow[j - i]
        coeffs.append(acc)
    return coeffs


def theta0_nodes(theta: float, alpha: float, n: int) -> List[int]:
    """psi_0(k/n): 1 when k/n >= exp(-alpha theta), else 0."""
    cut = math.exp(-alpha * theta)
    return [1 if k / n >= cut else 0 for k in range(n + 1)]


def phi_lambda(lam: complex, theta: float, alpha: float, mu):
    """theta_lam(t(mu)) with t(mu) = -log((1 - x0) mu + x0) / alpha."""
    x0 = math.exp(-alpha * theta)
    t = -onp.log((1.0 - x0) * onp.asarray(mu, dtype=onp.float64) + x0) / alpha
    return onp.exp(complex(lam) * t)


def _check_floor(kernel: FiniteKernel, label: str):
    floor = kernel.rounding_floor
    if floor > defaults.capacity_floor():
        raise CapacityError("%s: coefficient rounding floor %.3e exceeds %.3e; lower the order or "
                            "raise alpha" % (label, floor, defaults.capacity_floor()))
    if floor > defaults.warn_floor():
        logger.warning("%s: coefficient rounding floor %.3e limits the attainable accuracy", label, floor)


def measure_error(kernel: KernelLike, target: KernelLike, tol: Optional[float] = None) -> float:
    """L1 distance to the target at tolerance 1e-9 * (1 + ||target||)."""
    if tol is None:
        tol = 1e-9 * (1.0 + l1_norm(target, 1e-10))
    return l1_norm(difference(kernel, target), tol)


def approx_theta0(theta: float, cfg: ApproxConfig) -> Approximant:
    if not theta > 0:
        raise DomainError("theta must be positive, got %r" % (theta,))
    n, alpha = cfg.order, cfg.alpha
    _check_order(n)
    ctx = context(_coefficient_digits(n, 0.0, 0.0))
    values = [ctx.mpc(v) for v in theta0_nodes(theta, alpha, n)]
    coeffs = power_coefficients(ctx, values, ctx.mpf(0))
    # psi_0(0) = 0, so the constant coefficient vanishes
    terms = [ExpPolyTerm(0.0, -alpha * i, exact=c.real) for i, c in enumerate(coeffs) if i > 0]
    kernel = FiniteKernel(coalesce(terms), 0.0, theta, real_valued=True)
    _check_floor(kernel, "theta_0 approximant (n=%d)" % n)
    target = ApproxTarget(theta, 0.0, 0)
    eps = measure_error(kernel, target.kernel())
    logger.debug("theta_0 approximant n=%d alpha=%g: %d terms, eps=%.3e", n, alpha, len(kernel.terms), eps)
    return Approximant(kernel, cfg, eps, target)


def _lambda_coefficients(rate: complex, theta: float, alpha: float, n: int) -> List:
    """Power coefficients of the Bernstein approximant of exp(rate t(mu)), as mpmath numbers."""
    x0 = math.exp(-alpha * theta)
    log10_peak = max(rate.real, 0.0) * theta / math.log(10)
    ctx = context(_coefficient_digits(n, x0, log10_peak))
    x0m = ctx.exp(-ctx.mpf(alpha) * theta)
    rate_m = ctx.mpc(rate.real, rate.imag)
    values = []
    for k in range(n + 1):
        t = -ctx.log(x0m + (1 - x0m) * ctx.mpf(k) / n) / alpha
        values.append(ctx.exp(rate_m * t))
    return power_coefficients(ctx, values, x0m)


def approx_theta_lambda(lam: complex, theta: float, cfg: ApproxConfig) -> Approximant:
    """Stable approximant of theta_lam on [0, theta].

    Kernels with Re lam < 0 are realizable as they are and come back
    unchanged with measured_eps 0.
    """
    lam = complex(lam)
    if not theta > 0:
        raise DomainError("theta must be positive, got %r" % (theta,))
    target = ApproxTarget(theta, lam, 0)
    exact = target.kernel()
    if lam.real < 0:
        return Approximant(exact, cfg, 0.0, target)
    n, alpha = cfg.order, cfg.alpha
    _check_order(n)
    if cfg.residual == "shift":
        coeffs = _lambda_coefficients(lam + alpha, theta, alpha, n)
        terms = [ExpPolyTerm(0j, -alpha * (i + 1), exact=c) for i, c in enumerate(coeffs)]
    else:
        coeffs = _lambda_coefficients(lam, theta, alpha, n)
        terms = [ExpPolyTerm(0j, -alpha * i, exact=c) for i, c in enumerate(coeffs) if i > 0]
        if coeffs[0] != 0:
            residual = approx_theta0(theta, replace(cfg, order=cfg.theta0_order))
            terms += [t.scaled(coeffs[0]) for t in residual.kernel.terms]
    kernel = FiniteKernel(coalesce(terms), 0.0, theta, real_valued=lam.imag == 0.0)
    _check_floor(kernel, "theta_lambda approximant (lambda=%s, n=%d)" % (lam, n))
    eps = measure_error(kernel, exact)
    logger.debug("theta_lambda approximant lambda=%s n=%d alpha=%g residual=%s: eps=%.3e",
                 lam, n, alpha, cfg.residual, eps)
    return Approximant(kernel, cfg, eps, target)


def approx_derivative(base: Approximant, k: int) -> Approximant:
    """Lift an approximant of theta_lam to one of theta_lam^k = (-t)^k theta_lam."""
    if not base.target.is_elementary or base.target.k != 0:
        raise DomainError("approx_derivative needs an approximant of an elementary delay (k=0)")
    if int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer, got %r" % (k,))
    if k == 0:
        return base
    target = replace(base.target, k=int(k))
    kernel = derivative_lift(base.kernel, k)
    if base.measured_eps == 0.0:
        return Approximant(kernel, base.config, 0.0, target)
    eps = measure_error(kernel, target.kernel())
    bound = base.target.theta ** k * base.measured_eps
    if eps > bound + 1e-9:
        logger.warning("lifted error %.3e exceeds theta^k * base error %.3e", eps, bound)
    return Approximant(kernel, base.config, eps, target)


def approx_kernel(dec: Decomposition, cfg: ApproxConfig) -> Tuple[Approximant, float]:
    """Replace every unstable component of a decomposition by its approximant.

    Returns the assembled approximant and the error bound
    sum over components of theta^k * ||weight||_A * eps_lambda.
    """
    theta = dec.theta
    bases: Dict[complex, Approximant] = {}
    by_delay: Dict[float, List[ExpPolyTerm]] = {}
    bound = 0.0
    for comp in dec.components:
        if comp.lam.real < 0:
            lifted = elementary_kernel(comp.lam, theta, comp.k)
        else:
            if comp.lam not in bases:
                bases[comp.lam] = approx_theta_lambda(comp.lam, theta, cfg)
            base = bases[comp.lam]
            lifted = derivative_lift(base.kernel, comp.k)
            bound += theta ** comp.k * comp.weight_norm * base.measured_eps
        for d, c in comp.weight:
            by_delay.setdefault(d, []).extend(t.scaled(c) for t in lifted.terms)
    pieces = []
    for d in sorted(by_delay):
        terms = coalesce(by_delay[d])
        if dec.real_valued:
            terms = tuple(t.real_part() if t.lam.imag == 0.0 else t for t in terms)
        pieces.append(shift_support(FiniteKernel(terms, 0.0, theta, dec.real_valued), d))
    kernel = pieces[0] if len(pieces) == 1 else PiecewiseKernel(tuple(pieces))
    eps = measure_error(kernel, dec.to_kernel())
    logger.info("approximated %d components over %d delays: eps=%.3e, bound=%.3e",
                len(dec.components), len(pieces), eps, bound)
    return Approximant(kernel, cfg, eps, ApproxTarget(theta)), bound
