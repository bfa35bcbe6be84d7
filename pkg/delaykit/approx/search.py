"""Order selection for the Bernstein approximants."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp

from ..errors import CapacityError, DomainError, NotAchievedError
from ..utilities import defaults
from .bernstein import ApproxConfig, Approximant, approx_theta_lambda

logger = logging.getLogger(__name__)


def order_bound(lam: complex, theta: float, alpha: float, eps: float) -> int:
    """A-priori order n >= 4 theta^3 beta^2 / eps^3 * exp(5 Re(lam) theta).

    beta = (exp(Re(lam) theta) - 1) / (1 - exp(-alpha theta)). The bound is
    very conservative; `select_order` finds far smaller orders in practice.
    """
    if not eps > 0:
        raise DomainError("eps must be positive, got %r" % (eps,))
    if not (theta > 0 and alpha > 0):
        raise DomainError("theta and alpha must be positive")
    rate = complex(lam).real
    if rate < 0:
        raise DomainError("order_bound needs Re(lambda) >= 0, got %g" % rate)
    if rate == 0:
        return 1
    beta = math.expm1(rate * theta) / -math.expm1(-alpha * theta)
    log_n = (math.log(4.0) + 3 * math.log(theta) + 2 * math.log(beta) - 3 * math.log(eps)
             + 5 * rate * theta)
    n = max(1, int(mp.ceil(mp.exp(log_n))))
    logger.info("conservative order bound for lambda=%s, eps=%g: n >= %d", lam, eps, n)
    return n


def select_order(lam: complex, theta: float, alpha: float, eps: float, n_max: int,
                 residual: str = "shift", theta0_order: Optional[int] = None) -> Approximant:
    """Smallest order (doubling, then bisection) whose measured error is at most eps."""
    if not eps > 0:
        raise DomainError("eps must be positive, got %r" % (eps,))
    if int(n_max) != n_max or n_max < 1:
        raise DomainError("n_max must be a positive integer, got %r" % (n_max,))
    built: Dict[int, Optional[Approximant]] = {}

    def build(n):
        if n not in built:
            cfg = ApproxConfig(alpha, n, theta0_order, eps, residual)
            try:
                built[n] = approx_theta_lambda(lam, theta, cfg)
            except CapacityError as exc:
                logger.info("order %d out of capacity: %s", n, exc)
                built[n] = None
        return built[n]

    def best():
        found = [a for a in built.values() if a is not None]
        return min(found, key=lambda a: a.measured_eps) if found else None

    failed, n = 0, 1
    while True:
        app = build(n)
        if app is None:
            raise NotAchievedError("eps=%g not reached before the capacity limit at n=%d" % (eps, n),
                                   best=best())
        logger.debug("select_order: n=%d eps=%.3e", n, app.measured_eps)
        if app.measured_eps <= eps:
            break
        failed = n
        if n >= n_max:
            raise NotAchievedError("eps=%g not reached for n <= %d (best %.3e)"
                                   % (eps, n_max, best().measured_eps), best=best())
        n = min(2 * n, int(n_max))

    hi = n
    while hi - failed > 1:
        mid = (failed + hi) // 2
        app = build(mid)
        if app is not None and app.measured_eps <= eps:
            hi = mid
        else:
            failed = mid
    logger.info("selected order %d for lambda=%s, eps=%g", hi, lam, eps)
    return built[hi]


def error_sweep(lam: complex, theta: float, alpha: float, orders: Sequence[int],
                residual: str = "shift", threads: Optional[int] = None) -> List[Tuple[int, float]]:
    """(n, measured_eps) for every order, in input order."""
    if threads is None:
        threads = defaults.default_threads()

    def run(n):
        return n, approx_theta_lambda(lam, theta, ApproxConfig(alpha, n, residual=residual)).measured_eps

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, orders))
