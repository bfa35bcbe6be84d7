"""
Adaptive Simpson quadrature and the L1 norm of kernels.

Panels are refined breadth first: every pass evaluates the integrand on all
unconverged panels at once, accepts those whose Richardson error estimate is
below their share of the tolerance and bisects the rest.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as onp
from scipy.optimize import bisect

from ..errors import ConvergenceError, DomainError
from ..utilities import defaults
from .base import FiniteKernel, KernelLike, PiecewiseKernel

logger = logging.getLogger(__name__)


def _simpson(fa, fm, fb, h):
    """h/3 * (f(a) + 4 f(m) + f(b)), with h half the panel width."""
    return h / 3.0 * (fa + 4.0 * fm + fb)


def integrate_panels(fn: Callable, edges: Sequence[float], tol: float,
                     cap: Optional[int] = None) -> Tuple[onp.ndarray, float]:
    """Integrate `fn` over every interval [edges[i], edges[i+1]].

    A panel is accepted once its error estimate drops below
    tol * (panel width) / (edges[-1] - edges[0]), so the summed error of all
    intervals stays below `tol`. Returns the per-interval integrals and the
    summed error estimate.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive, got %g" % tol)
    if cap is None:
        cap = defaults.panel_cap()
    edges = onp.asarray(edges, dtype=onp.float64)
    total = edges[-1] - edges[0]
    lo, hi = edges[:-1], edges[1:]
    owner = onp.arange(lo.size)
    mid = 0.5 * (lo + hi)
    fvals = onp.asarray(fn(onp.concatenate([lo, mid, hi])))
    flo, fmid, fhi = onp.split(fvals, 3)
    whole = _simpson(flo, fmid, fhi, 0.5 * (hi - lo))

    result = onp.zeros(lo.size, dtype=fvals.dtype)
    error = 0.0
    created = lo.size
    while lo.size:
        lmid, rmid = 0.5 * (lo + mid), 0.5 * (mid + hi)
        quarter = onp.asarray(fn(onp.concatenate([lmid, rmid])))
        flm, frm = onp.split(quarter, 2)
        h = 0.25 * (hi - lo)
        left = _simpson(flo, flm, fmid, h)
        right = _simpson(fmid, frm, fhi, h)
        est = (left + right - whole) / 15.0
        done = onp.abs(est) < tol * (hi - lo) / total
        # no resolution left below this width
        done |= (lmid <= lo) | (rmid >= hi)
        onp.add.at(result, owner[done], (left + right + est)[done])
        error += float(onp.abs(est[done]).sum())

        keep = ~done
        created += 2 * int(keep.sum())
        if created > cap:
            best = result.sum() + whole[keep].sum()
            raise ConvergenceError("adaptive Simpson exceeded %d panels" % cap, best_estimate=best)
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, fmid, fhi = flo[keep], fmid[keep], fhi[keep]
        lmid, rmid, flm, frm = lmid[keep], rmid[keep], flm[keep], frm[keep]
        left, right, owner = left[keep], right[keep], owner[keep]
        lo, mid, hi, flo, fmid, fhi, whole, owner = (
            onp.concatenate([lo, mid]), onp.concatenate([lmid, rmid]), onp.concatenate([mid, hi]),
            onp.concatenate([flo, fmid]), onp.concatenate([flm, frm]), onp.concatenate([fmid, fhi]),
            onp.concatenate([left, right]), onp.concatenate([owner, owner]))
    logger.debug("adaptive Simpson used %d panels, error estimate %.3e", created, error)
    return result, error


def adaptive_simpson(fn: Callable, a: float, b: float, tol: float = 1e-10) -> Tuple[complex, float]:
    """Integral of `fn` over [a, b] and its error estimate."""
    if a == b:
        return 0.0, 0.0
    values, error = integrate_panels(fn, [a, b], tol)
    return values[0], error


def sign_changes(fn: Callable, a: float, b: float, scan: Optional[int] = None):
    """Zeros of Re fn in (a, b), located by bisection on a uniform scan."""
    if scan is None:
        scan = defaults.scan_points()
    grid = onp.linspace(a, b, scan)
    re = onp.real(onp.asarray(fn(grid)))
    roots = []

    def real_part(x):
        return float(onp.real(onp.asarray(fn(onp.array([x])))[0]))

    for i in range(scan - 1):
        if re[i] == 0.0 and 0 < i:
            roots.append(grid[i])
        elif re[i] * re[i + 1] < 0:
            roots.append(bisect(real_part, grid[i], grid[i + 1], xtol=4e-16 * max(1.0, abs(b)),
                                maxiter=200))
    return roots


def abs_integral(fn: Callable, a: float, b: float, tol: float) -> float:
    """Integral of |fn| over [a, b], split at the sign changes of Re fn."""
    edges = [a] + [r for r in sign_changes(fn, a, b) if a < r < b] + [b]

    def magnitude(t):
        return onp.abs(onp.asarray(fn(t)))

    values, _ = integrate_panels(magnitude, edges, tol)
    return float(values.sum())


def _finite_l1(kernel: FiniteKernel, tol: float) -> float:
    if not kernel.terms:
        return 0.0
    return abs_integral(kernel.raw, kernel.support_start, kernel.support_end, tol)


def l1_norm(kernel: KernelLike, tol: float = 1e-10) -> float:
    """L1 norm of the kernel, accurate to the absolute tolerance `tol`."""
    if not tol > 0:
        raise DomainError("tolerance must be positive, got %r" % (tol,))
    if isinstance(kernel, PiecewiseKernel):
        return float(sum(_finite_l1(seg, tol * seg.length / kernel.length) for seg in kernel.segments()))
    return _finite_l1(kernel, tol)


def integrate_kernel(kernel: KernelLike, weight: Callable, tol: float) -> complex:
    """Integral of kernel(t) * weight(t) over the support."""
    if not tol > 0:
        raise DomainError("tolerance must be positive, got %r" % (tol,))
    segments = kernel.segments() if isinstance(kernel, PiecewiseKernel) else [kernel]
    total = 0.0j
    for seg in segments:
        if not seg.terms:
            continue
        value, _ = adaptive_simpson(lambda t, seg=seg: seg.raw(t) * weight(t),
                                    seg.support_start, seg.support_end,
                                    tol * seg.length / kernel.length)
        total += complex(value)
    return total
