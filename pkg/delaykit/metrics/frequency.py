"""
Frequency-domain error certificates.

The sup over omega of |f_hat(i omega) - g_hat(i omega)| is taken on a log
grid, at omega = 0, and refined by a bounded scalar search around the grid
argmax.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as onp
from scipy.optimize import minimize_scalar

from ..errors import DomainError
from ..kernels.base import FiniteKernel, PiecewiseKernel
from ..laplace.frequency import FrequencyGrid
from ..laplace.transfer import Decomposition, decompose
from .distance import a_norm_distance

logger = logging.getLogger(__name__)

GRID_MIN = 1e-2
GRID_MAX = 1e3
MAX_LOG_STEP = 0.02


@dataclass(frozen=True)
class ErrorReport:
    l1_error: Optional[float]
    hinf_error: float
    phase_defect: float
    grid: FrequencyGrid
    hinf_omega: float = 0.0
    tol: float = 1e-10

    def to_dict(self) -> Dict[str, Any]:
        return {"l1": self.l1_error, "hinf": self.hinf_error, "phase_defect": self.phase_defect,
                "grid": {"min": self.grid.omegas[0], "max": self.grid.omegas[-1], "pts": len(self.grid)}}


def check_grid(grid: FrequencyGrid):
    w = grid.array
    if w.size < 2 or w[0] <= 0:
        raise DomainError("frequency grid needs at least two positive frequencies")
    if w[0] > GRID_MIN * (1 + 1e-9) or w[-1] < GRID_MAX * (1 - 1e-9):
        raise DomainError("frequency grid must span [%g, %g], got [%g, %g]" % (GRID_MIN, GRID_MAX, w[0], w[-1]))
    step = float(onp.max(onp.diff(onp.log10(w))))
    if step > MAX_LOG_STEP * (1 + 1e-9):
        raise DomainError("frequency grid is too coarse: %.4f decades between points, need <= %g (50 per decade)"
                          % (step, MAX_LOG_STEP))


def _transferable(x):
    if isinstance(x, (FiniteKernel, PiecewiseKernel)):
        return decompose(x)
    return x


def _kernel_of(x):
    if isinstance(x, (FiniteKernel, PiecewiseKernel)):
        return x
    if isinstance(x, Decomposition):
        return x.to_kernel()
    kernel = getattr(x, "kernel", None)
    if isinstance(kernel, (FiniteKernel, PiecewiseKernel)):
        return kernel
    return None


def frequency_error(f, g, grid: Optional[FrequencyGrid] = None, l1_error: Optional[float] = None,
                    tol: float = 1e-10) -> ErrorReport:
    """H-infinity and phase errors of g against f on the imaginary axis.

    `f` and `g` may be kernels, decompositions, approximants or anything with
    a vectorized `transfer(s)`. l1_error is measured when both sides have a
    kernel and left absent otherwise.
    """
    if grid is None:
        grid = FrequencyGrid.logspace(GRID_MIN, GRID_MAX, 50)
    check_grid(grid)
    f_t, g_t = _transferable(f), _transferable(g)

    def gap(omega):
        s = 1j * onp.asarray(omega, dtype=onp.float64)
        return onp.abs(onp.asarray(f_t.transfer(s)) - onp.asarray(g_t.transfer(s)))

    omegas = onp.concatenate([[0.0], grid.array])
    s = 1j * omegas
    fv = onp.asarray(f_t.transfer(s), dtype=onp.complex128)
    gv = onp.asarray(g_t.transfer(s), dtype=onp.complex128)
    err = onp.abs(fv - gv)
    idx = int(onp.argmax(err))
    hinf, hinf_omega = float(err[idx]), float(omegas[idx])
    if 1 <= idx:
        lo = math.log(omegas[max(idx - 1, 1)])
        hi = math.log(omegas[min(idx + 1, omegas.size - 1)])
        if hi > lo:
            res = minimize_scalar(lambda lw: -float(gap(math.exp(lw))), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            if -res.fun > hinf:
                hinf, hinf_omega = float(-res.fun), math.exp(res.x)

    dphi = onp.angle(fv) - onp.angle(gv)
    phase_defect = float(onp.max(onp.abs(fv) * 2 * onp.abs(onp.sin(0.5 * dphi))))

    if l1_error is None:
        fk, gk = _kernel_of(f), _kernel_of(g)
        if fk is not None and gk is not None:
            l1_error = a_norm_distance(fk, gk, tol)
    report = ErrorReport(l1_error, hinf, phase_defect, grid, hinf_omega, tol)
    logger.info("frequency error: hinf=%.3e at omega=%.4g, phase defect=%.3e, l1=%s",
                hinf, hinf_omega, phase_defect, "absent" if l1_error is None else "%.3e" % l1_error)
    return report
