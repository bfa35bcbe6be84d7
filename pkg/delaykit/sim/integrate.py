"""
Fixed-step simulation of delay systems and the direct convolution oracle.

Inputs are sampled on the uniform grid t_n = n dt and linearly interpolated
between samples. Everything before t = 0 is exactly zero.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence, Tuple

import numpy as onp

from ..errors import DomainError, InstabilityError
from ..kernels.base import KernelLike, PiecewiseKernel
from ..kernels.quadrature import integrate_panels
from ..utilities import defaults
from .realization import DelayStateSpace

logger = logging.getLogger(__name__)

Signal = Callable[[onp.ndarray], onp.ndarray]

_SNAP = 1e-9


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 10.0
    integrator: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError("dt must be positive, got %r" % (self.dt,))
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError("horizon must be positive, got %r" % (self.horizon,))
        if self.integrator != "rk4":
            raise DomainError("only the rk4 integrator is available, got %r" % (self.integrator,))
        if self.horizon / self.dt > 1e7:
            raise DomainError("horizon / dt = %g exceeds 1e7 steps" % (self.horizon / self.dt))

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def times(self) -> onp.ndarray:
        return onp.arange(self.steps + 1) * self.dt

    def check_delay(self, theta: float):
        if self.dt > theta / 10.0 * (1.0 + 1e-12):
            raise DomainError("dt=%g is too coarse for delay %g; need dt <= %g" % (self.dt, theta, theta / 10.0))


@dataclass(frozen=True, eq=False)
class SimTrace:
    times: onp.ndarray
    signals: Dict[str, onp.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = onp.asarray(self.times, dtype=onp.float64)
        if times.size == 0 or times[0] != 0.0:
            raise DomainError("trace times must start at 0")
        for name, values in self.signals.items():
            if len(values) != times.size:
                raise DomainError("signal %r has %d samples for %d times" % (name, len(values), times.size))
        object.__setattr__(self, "times", times)

    def __getitem__(self, name) -> onp.ndarray:
        return self.signals[name]

    @property
    def terminal(self) -> Dict[str, complex]:
        return {name: values[-1] for name, values in self.signals.items()}

    def sup_diff(self, other: "SimTrace", name: str = "y", other_name: str = None) -> float:
        a, b = self.signals[name], other.signals[other_name or name]
        if a.shape != b.shape:
            raise DomainError("traces have different lengths")
        return float(onp.max(onp.abs(a - b)))

    def to_csv(self, path: str):
        names = list(self.signals)
        columns = [self.times] + [onp.real(self.signals[n]) for n in names]
        onp.savetxt(path, onp.column_stack(columns), fmt="%.9e", delimiter=",",
                    header=",".join(["t"] + names), comments="")
        logger.info("wrote %d samples of %s to %s", self.times.size, ", ".join(names), path)


def step(amplitude: float = 1.0) -> Signal:
    def signal(t):
        t = onp.asarray(t, dtype=onp.float64)
        return onp.where(t >= 0, amplitude, 0.0)
    return signal


def sine(omega: float = 1.0, amplitude: float = 1.0) -> Signal:
    def signal(t):
        t = onp.asarray(t, dtype=onp.float64)
        return onp.where(t >= 0, amplitude * onp.sin(omega * t), 0.0)
    return signal


def zero() -> Signal:
    return step(0.0)


def from_samples(times: Sequence[float], values: Sequence[float]) -> Signal:
    """Linear interpolation of samples; zero before 0, held after the last sample."""
    times = onp.asarray(times, dtype=onp.float64)
    values = onp.asarray(values, dtype=onp.float64)
    if times.ndim != 1 or times.shape != values.shape or times.size < 2:
        raise DomainError("need at least two (t, value) samples")
    if onp.any(onp.diff(times) <= 0):
        raise DomainError("sample times must be strictly increasing")

    def signal(t):
        t = onp.asarray(t, dtype=onp.float64)
        return onp.where(t >= 0, onp.interp(t, times, values), 0.0)
    return signal


def from_csv(path: str) -> Signal:
    try:
        data = onp.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DomainError("cannot read input samples from %s: %s" % (path, exc))
    if data.shape[1] < 2:
        raise DomainError("input CSV needs columns t,u")
    return from_samples(data[:, 0], data[:, 1])


class InputHistory:
    """Ring buffer of input samples u(n dt), read back by linear interpolation."""

    def __init__(self, dt: float, span: float):
        self.dt = dt
        self.size = int(math.ceil(span / dt)) + 4
        self._buf = onp.zeros(self.size, dtype=onp.complex128)
        self._count = 0

    def push(self, value):
        self._buf[self._count % self.size] = value
        self._count += 1

    def sample(self, i: int) -> complex:
        if i >= self._count:
            raise DomainError("history queried at sample %d before it was recorded" % i)
        if i < self._count - self.size:
            raise DomainError("history no longer holds sample %d" % i)
        return self._buf[i % self.size]

    def __call__(self, s: float, side: str = "right") -> complex:
        """Input at time s.

        At the jump from the zero history to u(0), `side` picks the limit:
        "right" gives u(0), "left" gives 0.
        """
        p = s / self.dt
        if p < -_SNAP or (side == "left" and p < _SNAP):
            return 0.0
        p = max(p, 0.0)
        r = round(p)
        if abs(p - r) < _SNAP:
            return self.sample(int(r))
        i = int(math.floor(p))
        frac = p - i
        return (1.0 - frac) * self.sample(i) + frac * self.sample(i + 1)


def simulate_block(sys: DelayStateSpace, signal: Signal, cfg: SimConfig) -> SimTrace:
    """RK4 on x' = A x + B0 u(t) + Bd u(t - theta), y = C x."""
    cfg.check_delay(sys.theta)
    dt, n, theta = cfg.dt, cfg.steps, sys.theta
    times = cfg.times
    u = onp.asarray(signal(times), dtype=onp.float64)
    u_mid = onp.asarray(signal(times[:-1] + 0.5 * dt), dtype=onp.float64)
    A, B0, Bd, C = sys.A, sys.B0, sys.Bd, sys.C
    limit = defaults.instability_threshold()

    hist = InputHistory(dt, theta + 2 * dt)
    hist.push(u[0])
    x = onp.zeros(sys.order, dtype=onp.complex128)
    y = onp.zeros(n + 1, dtype=onp.complex128)
    for k in range(n):
        t = times[k]
        d0, dm, d1 = hist(t - theta), hist(t + 0.5 * dt - theta), hist(t + dt - theta, side="left")
        k1 = A @ x + B0 * u[k] + Bd * d0
        k2 = A @ (x + 0.5 * dt * k1) + B0 * u_mid[k] + Bd * dm
        k3 = A @ (x + 0.5 * dt * k2) + B0 * u_mid[k] + Bd * dm
        k4 = A @ (x + dt * k3) + B0 * u[k + 1] + Bd * d1
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        hist.push(u[k + 1])
        y[k + 1] = C @ x
        if abs(y[k + 1]) > limit:
            raise InstabilityError("output exceeded %g at t=%g" % (limit, times[k + 1]),
                                   time=times[k + 1], value=y[k + 1])
    if sys.real_valued:
        y = y.real
    return SimTrace(times, {"u": u, "y": y})


def fir_taps(kernel: KernelLike, dt: float, tol: float = 1e-9) -> Tuple[onp.ndarray, onp.ndarray]:
    """Weights of the kernel against the two halves of each interpolation hat.

    Returns (left, right) with left[m] = int k(tau) (1 - sigma) and
    right[m] = int k(tau) sigma over tau in [m dt, (m+1) dt],
    sigma = tau / dt - m.
    """
    segments = kernel.segments() if isinstance(kernel, PiecewiseKernel) else [kernel]
    panels = int(math.ceil(kernel.support_end / dt - _SNAP)) + 1
    mass0 = onp.zeros(panels, dtype=onp.complex128)
    mass1 = onp.zeros(panels, dtype=onp.complex128)
    for seg in segments:
        if not seg.terms:
            continue
        lo, hi = seg.support_start, seg.support_end
        grid = dt * onp.arange(int(math.floor(lo / dt)), int(math.ceil(hi / dt)) + 1)
        edges = onp.unique(onp.concatenate([[lo, hi], grid[(grid > lo) & (grid < hi)]]))
        owner = onp.floor(edges[:-1] / dt + _SNAP).astype(int)
        share = tol * (hi - lo) / kernel.length
        # the moment below subtracts m dt i0, so i0 needs m times the accuracy
        i0, _ = integrate_panels(seg.raw, edges, share / panels)
        # first moment about the panel start, in units of dt
        i1, _ = integrate_panels(lambda t, seg=seg: seg.raw(t) * t, edges, share * dt)
        onp.add.at(mass0, owner, i0)
        onp.add.at(mass1, owner, (i1 - owner * dt * i0) / dt)
    return mass0 - mass1, mass1


def _fir_output(left: onp.ndarray, right: onp.ndarray, u: onp.ndarray) -> onp.ndarray:
    combined = onp.zeros(left.size + 1, dtype=onp.complex128)
    combined[:-1] += left
    combined[1:] += right
    y = onp.convolve(u, combined)[:u.size]
    # drop the ramp towards u(-dt) = 0 while the kernel window still reaches t < 0
    m = min(left.size, u.size)
    y[:m] -= left[:m] * u[0]
    return y


def convolve_direct(kernel: KernelLike, signal: Signal, cfg: SimConfig) -> SimTrace:
    """y(t) = int k(tau) u(t - tau) dtau on the grid, with exact kernel weights."""
    cfg.check_delay(kernel.length)
    times = cfg.times
    u = onp.asarray(signal(times), dtype=onp.float64)
    left, right = fir_taps(kernel, cfg.dt)
    y = _fir_output(left, right, u)
    if kernel.real_valued:
        y = y.real
    return SimTrace(times, {"u": u, "y": y})
