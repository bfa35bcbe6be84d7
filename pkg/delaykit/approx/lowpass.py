"""
Low-pass lumped approximation: a train of weighted impulses at t_i = i theta / n
filtered by 1 / (s + a). The impulse response is
sum_i gamma_i exp(-a (t - t_i)) h(t - t_i), a stable kernel on [0, inf).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as onp
from scipy import linalg

from ..errors import DomainError, NumericalError
from ..kernels.base import AtomicDistribution, elementary_kernel
from ..kernels.quadrature import abs_integral

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LowpassLumped:
    a: float
    taps: AtomicDistribution
    residual: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError("filter pole a must be positive and finite, got %r" % (self.a,))
        object.__setattr__(self, "a", float(self.a))

    def response(self, t):
        """Impulse response, exactly zero for t < 0."""
        scalar = onp.ndim(t) == 0
        t = onp.asarray(t, dtype=onp.float64)
        tau = t[..., None] - self.taps.times
        active = tau >= 0
        with onp.errstate(over="ignore"):
            vals = onp.where(active, self.taps.weights * onp.exp(-self.a * onp.where(active, tau, 0.0)), 0.0)
        out = vals.sum(-1)
        if scalar:
            return complex(out)
        return out

    def transfer(self, s):
        s = onp.asarray(s, dtype=onp.complex128)
        return self.taps.transfer(s) / (s + self.a)

    def gain_bound(self, omega):
        """(sum |gamma_i|) / |i omega + a|, an upper bound of |transfer(i omega)|."""
        return self.taps.total_weight / onp.abs(1j * onp.asarray(omega, dtype=onp.float64) + self.a)

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a, "taps": [[t, f.real, f.imag] for t, f in self.taps.impulses]}


def lowpass_residual(lumped: LowpassLumped, lam: complex, theta: float, tol: float = 1e-9) -> float:
    """L1 distance to theta_lam over [0, theta + 5 / a], split at the taps and at theta."""
    target = elementary_kernel(lam, theta)
    end = theta + 5.0 / lumped.a
    times, weights = lumped.taps.times, lumped.taps.weights
    edges = sorted({0.0, theta, end, *[t for t in times if t < end]})

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        # both operands jump only at panel edges; use the smooth branch inside each panel
        active = times <= lo
        w, tt, inside = weights[active], times[active], hi <= theta

        def error(t, w=w, tt=tt, inside=inside):
            t = onp.asarray(t, dtype=onp.float64)
            val = (w * onp.exp(-lumped.a * (t[..., None] - tt))).sum(-1)
            if inside:
                val = val - target.raw(t)
            return val

        total += abs_integral(error, lo, hi, tol * (hi - lo) / end)
    return total


def lowpass_lumped(lam: complex, theta: float, a: float, n: int,
                   fit_grid: Optional[int] = None) -> LowpassLumped:
    """Least-squares tap weights for the filtered impulse train approximating theta_lam."""
    if not theta > 0:
        raise DomainError("theta must be positive, got %r" % (theta,))
    if not a > 0:
        raise DomainError("filter pole a must be positive, got %r" % (a,))
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer, got %r" % (n,))
    n = int(n)
    if fit_grid is None:
        fit_grid = 10 * n
    if fit_grid < 10 * n:
        raise DomainError("fit_grid must be at least 10 n = %d, got %d" % (10 * n, fit_grid))
    lam = complex(lam)
    times = theta * onp.arange(n) / n
    grid = onp.linspace(0.0, theta + 5.0 / a, fit_grid)
    tau = grid[:, None] - times[None, :]
    design = onp.where(tau >= 0, onp.exp(-a * onp.clip(tau, 0.0, None)), 0.0)
    target = onp.asarray(elementary_kernel(lam, theta)(grid))
    if lam.imag == 0.0:
        target = target.real
    gamma, _, rank, sv = linalg.lstsq(design, target)
    if rank < n:
        raise NumericalError("low-pass fit matrix has rank %d < %d taps" % (rank, n),
                             diagnostic={"rank": int(rank), "singular_values": sv.tolist()})
    taps = AtomicDistribution(tuple(zip(times.tolist(), onp.asarray(gamma, dtype=onp.complex128).tolist())))
    lumped = LowpassLumped(a, taps)
    residual = lowpass_residual(lumped, lam, theta)
    logger.debug("low-pass fit lambda=%s a=%g n=%d: residual %.3e", lam, a, n, residual)
    return LowpassLumped(a, taps, residual)


def lowpass_from_dict(data: Dict[str, Any]) -> LowpassLumped:
    try:
        taps = AtomicDistribution(tuple((float(t), complex(float(re), float(im))) for t, re, im in data["taps"]))
        return LowpassLumped(float(data["a"]), taps)
    except (KeyError, TypeError, ValueError):
        raise DomainError("low-pass JSON needs 'a' and 'taps' as [[t, re, im], ...]")
