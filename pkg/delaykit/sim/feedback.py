"""
Stabilization of the unstable delayed plant p(s) = exp(-s) / (s - 1).

With the coprime factors n(s) = exp(-s) / (s + 1), d(s) = (s - 1) / (s + 1)
the Bezout identity n * 2e + d * (1 + 2 theta_1_hat) = 1 yields the
controller c = 2e / (1 + 2 theta_1_hat), i.e.

    y1(t) = -2 (theta_1 * y1)(t) + 2e e1(t)

in the loop e1 = u1 - y2, e2 = u2 + y1, y2' = y2 + e2(t - 1). The loop is
driven by a unit step at u2 with u1 = 0, so its DC gain is n(0) (1 + 2(e - 1)) = 2e - 1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as onp

from ..approx.bernstein import ApproxConfig, Approximant, approx_theta_lambda
from ..approx.search import select_order
from ..errors import DomainError, InstabilityError
from ..kernels.base import elementary_kernel
from ..laplace.transfer import theta_hat
from ..utilities import defaults
from .integrate import InputHistory, SimConfig, SimTrace, fir_taps
from .realization import DelayStateSpace, realize

logger = logging.getLogger(__name__)

E = math.e
# ||n||_A = 1 and ||d||_A = 1 + 2 for the factors above
NORM_N = 1.0
NORM_D = 3.0
DC_GAIN = 2 * E - 1
# sufficient bound on eps_d quoted in the literature for this loop; kept for comparison only
REFERENCE_THRESHOLD = E / (3 + E)

_FIXED_POINT_ITERATIONS = 5
_FIXED_POINT_TOL = 1e-12


def small_gain_margin(norm_n: float, norm_d: float, eps_n: float, eps_d: float) -> Tuple[float, bool]:
    """1 - (||n|| + ||d||) max(eps_n, eps_d); the perturbed loop is stable when positive."""
    for name, value in (("norm_n", norm_n), ("norm_d", norm_d), ("eps_n", eps_n), ("eps_d", eps_d)):
        if not (math.isfinite(value) and value >= 0):
            raise DomainError("%s must be finite and nonnegative, got %r" % (name, value))
    margin = 1.0 - (norm_n + norm_d) * max(eps_n, eps_d)
    return margin, margin > 0


def small_gain_threshold(norm_n: float = NORM_N, norm_d: float = NORM_D) -> float:
    threshold = 1.0 / (norm_n + norm_d)
    logger.info("small-gain threshold max(eps) < %.6f (reference value %.6f)", threshold, REFERENCE_THRESHOLD)
    return threshold


def bezout_residual(s):
    """n(s) 2e + d(s) (1 + 2 theta_1_hat(s)) - 1 at the sample points s."""
    s = onp.asarray(s, dtype=onp.complex128)
    n = onp.exp(-s) / (s + 1)
    d = (s - 1) / (s + 1)
    return n * 2 * E + d * (1 + 2 * onp.asarray(theta_hat(1.0, 1.0, 0, s))) - 1


@dataclass(frozen=True)
class DemoSummary:
    dc_ideal: float
    dc_app: float
    sup_diff: float
    order: int
    eps_measured: float
    margin: float
    stable: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"dc_ideal": self.dc_ideal, "dc_app": self.dc_app, "sup_diff": self.sup_diff,
                "order": self.order, "eps_measured": self.eps_measured, "margin": self.margin}


def _check_bounded(value, t):
    limit = defaults.instability_threshold()
    if not abs(value) <= limit:
        raise InstabilityError("closed loop diverged: |y| exceeded %g at t=%g" % (limit, t), time=t, value=value)


def simulate_ideal_loop(cfg: SimConfig, surrogate: bool = False) -> SimTrace:
    """The loop with the exact controller; `surrogate` drops the distributed delay."""
    dt, n = cfg.dt, cfg.steps
    times = cfg.times
    u2 = onp.ones(n + 1)
    left, right = fir_taps(elementary_kernel(1.0, 1.0), dt)
    taps = onp.zeros(left.size + 1)
    taps[:-1] += left.real
    taps[1:] += right.real
    left = left.real

    y = onp.zeros(n + 1)
    y1 = onp.zeros(n + 1)
    e2_hist = InputHistory(dt, 1.0 + 2 * dt)

    def controller(k):
        if surrogate:
            return -2 * E * y[k]
        # convolution of y1 with theta_1 up to sample k, without the y1[k] term
        m = min(k, taps.size - 1)
        rest = onp.dot(taps[1:m + 1], y1[k - m:k][::-1])
        if k < left.size:
            rest -= left[k] * y1[0] if k > 0 else 0.0
        guess = y1[k - 1] if k > 0 else 0.0
        head = taps[0] - (left[k] if k == 0 else 0.0)
        for _ in range(_FIXED_POINT_ITERATIONS):
            new = -2 * (head * guess + rest) - 2 * E * y[k]
            done = abs(new - guess) <= _FIXED_POINT_TOL * (1 + abs(new))
            guess = new
            if done:
                break
        return guess

    y1[0] = controller(0)
    e2_hist.push(u2[0] + y1[0])
    for k in range(n):
        t = times[k]
        d0, dm, d1 = (e2_hist(t - 1.0).real, e2_hist(t + 0.5 * dt - 1.0).real,
                      e2_hist(t + dt - 1.0, side="left").real)
        k1 = y[k] + d0
        k2 = y[k] + 0.5 * dt * k1 + dm
        k3 = y[k] + 0.5 * dt * k2 + dm
        k4 = y[k] + dt * k3 + d1
        y[k + 1] = y[k] + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_bounded(y[k + 1], times[k + 1])
        y1[k + 1] = controller(k + 1)
        e2_hist.push(u2[k + 1] + y1[k + 1])
    return SimTrace(times, {"u2": u2, "y1": y1, "y2": y})


def simulate_approx_loop(sys: DelayStateSpace, cfg: SimConfig) -> SimTrace:
    """The loop with the realized controller, integrated on the joint state [y2, x]."""
    cfg.check_delay(sys.theta)
    dt, n = cfg.dt, cfg.steps
    times = cfg.times
    A, B0, Bd, C = sys.A, sys.B0, sys.Bd, sys.C
    u2 = onp.ones(n + 1)
    y = onp.zeros(n + 1)
    y1 = onp.zeros(n + 1)
    e2_hist = InputHistory(dt, 1.0 + 2 * dt)
    y1_hist = InputHistory(dt, sys.theta + 2 * dt)

    def out(yv, x):
        return -2 * (C @ x).real - 2 * E * yv

    def rhs(yv, x, e2_delayed, y1_delayed):
        return yv + e2_delayed, A @ x + B0 * out(yv, x) + Bd * y1_delayed

    x = onp.zeros(sys.order, dtype=onp.complex128)
    y1[0] = out(0.0, x)
    e2_hist.push(u2[0] + y1[0])
    y1_hist.push(y1[0])
    for k in range(n):
        t = times[k]
        e0, em, e1 = e2_hist(t - 1.0), e2_hist(t + 0.5 * dt - 1.0), e2_hist(t + dt - 1.0, side="left")
        w0, wm, w1 = (y1_hist(t - sys.theta), y1_hist(t + 0.5 * dt - sys.theta),
                      y1_hist(t + dt - sys.theta, side="left"))
        ky1, kx1 = rhs(y[k], x, e0.real, w0.real)
        ky2, kx2 = rhs(y[k] + 0.5 * dt * ky1, x + 0.5 * dt * kx1, em.real, wm.real)
        ky3, kx3 = rhs(y[k] + 0.5 * dt * ky2, x + 0.5 * dt * kx2, em.real, wm.real)
        ky4, kx4 = rhs(y[k] + dt * ky3, x + dt * kx3, e1.real, w1.real)
        y[k + 1] = y[k] + dt / 6.0 * (ky1 + 2 * ky2 + 2 * ky3 + ky4)
        x = x + dt / 6.0 * (kx1 + 2 * kx2 + 2 * kx3 + kx4)
        _check_bounded(y[k + 1], times[k + 1])
        y1[k + 1] = out(y[k + 1], x)
        e2_hist.push(u2[k + 1] + y1[k + 1])
        y1_hist.push(y1[k + 1])
    return SimTrace(times, {"u2": u2, "y1": y1, "y2": y})


def closed_loop_demo(order: Optional[int] = None, cfg: Optional[SimConfig] = None,
                     eps: Optional[float] = None, alpha: Optional[float] = None,
                     n_max: int = 64) -> Tuple[SimTrace, SimTrace, DemoSummary]:
    """Step responses of the ideal loop and of the loop with an approximated controller.

    The controller approximant has the given order, or the smallest order
    whose measured error is at most eps. order=0 drops the distributed delay
    from the controller altogether, which leaves the plant pole at +1
    uncompensated.
    """
    if cfg is None:
        cfg = SimConfig(dt=0.01, horizon=20.0)
    if cfg.dt > 0.01 * (1 + 1e-12):
        raise DomainError("the demo needs dt <= 0.01, got %g" % cfg.dt)
    if alpha is None:
        alpha = defaults.default_demo_alpha()
    if order is None and eps is None:
        raise DomainError("give an order or an eps target")
    if order is not None and (int(order) != order or order < 0):
        raise DomainError("order must be a nonnegative integer, got %r" % (order,))

    ideal = simulate_ideal_loop(cfg)
    if order == 0:
        # dropping theta_1 altogether costs its whole norm e - 1
        used_order, eps_measured = 0, E - 1
        app = simulate_ideal_loop(cfg, surrogate=True)
    else:
        if order is None:
            approximant: Approximant = select_order(1.0, 1.0, alpha, eps, n_max)
        else:
            approximant = approx_theta_lambda(1.0, 1.0, ApproxConfig(alpha, int(order)))
        used_order, eps_measured = approximant.order, approximant.measured_eps
        app = simulate_approx_loop(realize(approximant.kernel), cfg)

    # the controller denominator carries 2 theta_1, so its error is twice the kernel error
    margin, stable = small_gain_margin(NORM_N, NORM_D, 0.0, 2 * eps_measured)
    small_gain_threshold()
    summary = DemoSummary(float(ideal["y2"][-1]), float(app["y2"][-1]), ideal.sup_diff(app, "y2"),
                          used_order, eps_measured, margin, stable)
    logger.info("demo order %d: eps=%.4f margin=%.4f dc ideal=%.6f app=%.6f sup diff=%.4f",
                summary.order, summary.eps_measured, margin, summary.dc_ideal, summary.dc_app,
                summary.sup_diff)
    return ideal, app, summary
