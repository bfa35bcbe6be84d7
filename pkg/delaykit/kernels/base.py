"""
Exponential-polynomial kernels with bounded support.

A kernel is a finite sum of terms c * t**j * exp(lam * t) restricted to a
closed interval [start, end] and zero elsewhere. Convolution with such a
kernel is a distributed delay.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Optional, Tuple, Union

import numpy as onp

from ..errors import CapacityError, DomainError
from ..utilities import defaults
from ..utilities.precision import (exact_exp, exact_sum, exp_poly_sum, is_exact, needs_precise, relative_precision,
                                   to_complex, working_dps)

logger = logging.getLogger(__name__)


def _finite_complex(value, name):
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError("%s must be finite, got %r" % (name, value))
    return z


def _finite_real(value, name):
    x = float(value)
    if not math.isfinite(x):
        raise DomainError("%s must be finite, got %r" % (name, value))
    return x


def _close(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


class StabilityClass(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class ExpPolyTerm:
    """c * t**j * exp(lam * t)

    `exact`, when set, is the mpmath value of c; `coeff` is then its
    complex128 rounding. Approximants keep it so that sums with large,
    cancelling coefficients stay evaluable.
    """
    coeff: complex
    lam: complex
    power: int = 0
    exact: Optional[Any] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.exact is not None:
            if not is_exact(self.exact):
                raise DomainError("exact coefficient must be an mpmath number, got %r" % (self.exact,))
            object.__setattr__(self, "coeff", to_complex(self.exact))
        object.__setattr__(self, "coeff", _finite_complex(self.coeff, "coeff"))
        object.__setattr__(self, "lam", _finite_complex(self.lam, "lambda"))
        if int(self.power) != self.power or self.power < 0:
            raise DomainError("power must be a nonnegative integer, got %r" % (self.power,))
        if self.power > defaults.max_power():
            raise CapacityError("power %d exceeds the cap of %d" % (self.power, defaults.max_power()))
        object.__setattr__(self, "power", int(self.power))

    @property
    def is_stable(self) -> bool:
        return self.lam.real < 0

    @property
    def value(self):
        """The coefficient at the best precision available."""
        return self.coeff if self.exact is None else self.exact

    @property
    def relative_precision(self) -> float:
        return relative_precision(self.value)

    def scaled(self, a) -> "ExpPolyTerm":
        """a * term; `a` may be an mpmath number."""
        if not is_exact(a):
            a = complex(a)
            if self.exact is None:
                return ExpPolyTerm(a * self.coeff, self.lam, self.power)
        return ExpPolyTerm(0j, self.lam, self.power, self.value * a)

    def real_part(self) -> "ExpPolyTerm":
        if self.exact is None:
            return replace(self, coeff=complex(self.coeff.real))
        return ExpPolyTerm(0j, self.lam, self.power, self.exact.real)

    def sup_abs(self, start: float, end: float) -> float:
        """sup of |t**j exp(lam t)| over [start, end]"""
        a, j = self.lam.real, self.power
        candidates = [start, end]
        if j > 0 and a < 0 and start < -j / a < end:
            candidates.append(-j / a)

        def log_mag(t):
            if j > 0 and t == 0.0:
                return -math.inf
            return (j * math.log(t) if j > 0 else 0.0) + a * t

        log_sup = max(log_mag(t) for t in candidates)
        if log_sup > 700.0:
            return math.inf
        return math.exp(log_sup)


def coalesce(terms: Iterable[ExpPolyTerm], tol: Optional[float] = None) -> Tuple[ExpPolyTerm, ...]:
    """Merge terms with equal (lam, power) and drop cancelled ones."""
    if tol is None:
        tol = defaults.coalesce_tol()
    merged = []  # [lam, power, coeff, sum of |coeff|, values]
    for term in terms:
        for slot in merged:
            if slot[1] == term.power and _close(slot[0], term.lam, tol):
                slot[2] += term.coeff
                slot[3] += abs(term.coeff)
                slot[4].append(term.value)
                break
        else:
            merged.append([term.lam, term.power, term.coeff, abs(term.coeff), [term.value]])
    out = []
    for lam, j, c, scale, values in merged:
        exact = exact_sum(values) if len(values) > 1 else (values[0] if is_exact(values[0]) else None)
        cut = tol * scale
        if exact is not None:
            c = to_complex(exact)
            cut = relative_precision(exact) * scale
        if abs(c) > cut:
            out.append(ExpPolyTerm(c, lam, j, exact))
    return tuple(out)


def _conjugate_closed(terms, tol=1e-12) -> bool:
    for term in terms:
        if term.lam.imag == 0.0 and term.coeff.imag == 0.0:
            continue
        partner = [p for p in terms
                   if p.power == term.power
                   and _close(p.lam, term.lam.conjugate(), tol)
                   and _close(p.coeff, term.coeff.conjugate(), tol)]
        if not partner:
            return False
    return True


@dataclass(frozen=True)
class FiniteKernel:
    terms: Tuple[ExpPolyTerm, ...]
    support_start: float
    support_end: float
    real_valued: bool = False

    def __post_init__(self):
        terms = tuple(t if isinstance(t, ExpPolyTerm) else ExpPolyTerm(*t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        start = _finite_real(self.support_start, "support_start")
        end = _finite_real(self.support_end, "support_end")
        if start < 0:
            raise DomainError("support must lie in [0, inf), got start %g" % start)
        if not start < end:
            raise DomainError("support_start %g must be smaller than support_end %g" % (start, end))
        object.__setattr__(self, "support_start", start)
        object.__setattr__(self, "support_end", end)
        object.__setattr__(self, "real_valued", bool(self.real_valued))
        if self.real_valued and not _conjugate_closed(terms):
            raise DomainError("real_valued kernel needs conjugate partners for every complex term")

    def __call__(self, t, precise: Optional[bool] = None):
        return eval_kernel(self, t, precise)

    @property
    def support(self) -> Tuple[float, float]:
        return (self.support_start, self.support_end)

    @property
    def length(self) -> float:
        return self.support_end - self.support_start

    @property
    def stability(self) -> StabilityClass:
        if all(t.is_stable for t in self.terms):
            return StabilityClass.STABLE
        return StabilityClass.UNSTABLE

    @property
    def mass(self) -> float:
        return sum(abs(t.coeff) * t.sup_abs(self.support_start, self.support_end) for t in self.terms)

    @property
    def rounding_floor(self) -> float:
        """Evaluation error left by the stored coefficients."""
        return sum(abs(t.coeff) * t.sup_abs(self.support_start, self.support_end) * t.relative_precision
                   for t in self.terms)

    def raw(self, t, precise: Optional[bool] = None):
        """The analytic expression without the support mask."""
        t = onp.asarray(t, dtype=onp.float64)
        if not self.terms:
            return onp.zeros(t.shape, dtype=onp.complex128)
        if precise is None:
            precise = needs_precise(self.mass)
        if precise:
            vals = exp_poly_sum(((x.value, x.lam, x.power) for x in self.terms),
                                t, working_dps(self.mass))
            return vals.reshape(t.shape)
        c = onp.array([x.coeff for x in self.terms])
        lam = onp.array([x.lam for x in self.terms])
        j = onp.array([x.power for x in self.terms])
        tt = t[..., None]
        with onp.errstate(over="ignore", invalid="ignore"):
            return (c * tt ** j * onp.exp(lam * tt)).sum(-1)

    def scale(self, a: complex) -> "FiniteKernel":
        a = _finite_complex(a, "scale")
        real = self.real_valued and a.imag == 0.0
        return replace(self, terms=coalesce(t.scaled(a) for t in self.terms),
                       real_valued=real)

    def restrict(self, start: float, end: float) -> "FiniteKernel":
        if start < self.support_start or end > self.support_end:
            raise DomainError("[%g, %g] is not inside the support [%g, %g]"
                              % (start, end, self.support_start, self.support_end))
        return replace(self, support_start=start, support_end=end)


def eval_kernel(kernel: FiniteKernel, t, precise: Optional[bool] = None):
    """Kernel values at `t`; exactly zero outside the closed support."""
    scalar = onp.ndim(t) == 0
    t = onp.asarray(t, dtype=onp.float64)
    inside = (t >= kernel.support_start) & (t <= kernel.support_end)
    out = onp.zeros(t.shape, dtype=onp.complex128)
    if inside.any():
        out[inside] = kernel.raw(t[inside], precise)
    if scalar:
        return complex(out)
    return out


def elementary_kernel(lam: complex, theta: float, k: int = 0) -> FiniteKernel:
    """(-t)**k exp(lam t) on [0, theta]."""
    theta = _finite_real(theta, "theta")
    if theta <= 0:
        raise DomainError("theta must be positive, got %g" % theta)
    if int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer, got %r" % (k,))
    lam = _finite_complex(lam, "lambda")
    return FiniteKernel((ExpPolyTerm((-1.0) ** k, lam, int(k)),), 0.0, theta,
                        real_valued=lam.imag == 0.0)


def _same_support(f: FiniteKernel, g: FiniteKernel) -> bool:
    tol = defaults.coalesce_tol()
    return (abs(f.support_start - g.support_start) <= tol * max(1.0, f.support_end)
            and abs(f.support_end - g.support_end) <= tol * max(1.0, f.support_end))


def scale_add(a: complex, f: FiniteKernel, b: complex, g: FiniteKernel) -> FiniteKernel:
    """a*f + b*g for kernels on the same support."""
    if not _same_support(f, g):
        raise DomainError("supports differ: [%g, %g] vs [%g, %g]; shift or extend first"
                          % (f.support_start, f.support_end, g.support_start, g.support_end))
    a = _finite_complex(a, "a")
    b = _finite_complex(b, "b")
    terms = [t.scaled(a) for t in f.terms] + [t.scaled(b) for t in g.terms]
    real = f.real_valued and g.real_valued and a.imag == 0.0 and b.imag == 0.0
    return FiniteKernel(coalesce(terms), f.support_start, f.support_end, real)


def derivative_lift(kernel: FiniteKernel, k: int) -> FiniteKernel:
    """Multiply the kernel by (-t)**k."""
    if int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer, got %r" % (k,))
    if k == 0:
        return kernel
    top = max((t.power for t in kernel.terms), default=0) + k
    if top > defaults.max_power():
        raise CapacityError("lifted power %d exceeds the cap of %d" % (top, defaults.max_power()))
    sign = (-1.0) ** k
    return replace(kernel, terms=tuple(replace(t.scaled(sign), power=t.power + k) for t in kernel.terms))


def shift_support(kernel: FiniteKernel, delay: float) -> FiniteKernel:
    """The kernel t -> kernel(t - delay), re-expanded in the term basis."""
    delay = _finite_real(delay, "delay")
    if delay == 0.0:
        return kernel
    start = kernel.support_start + delay
    if start < 0:
        raise DomainError("shift by %g moves the support start to %g < 0" % (delay, start))
    terms = []
    for t in kernel.terms:
        # c (t-d)^j e^{lam (t-d)} = c e^{-lam d} sum_m C(j,m) (-d)^(j-m) t^m e^{lam t}
        factor = exact_exp(t.exact, -t.lam, delay) if t.exact is not None else complex(onp.exp(-t.lam * delay))
        shifted = t.scaled(factor)
        for m in range(t.power + 1):
            terms.append(replace(shifted.scaled(math.comb(t.power, m) * (-delay) ** (t.power - m)), power=m))
    return FiniteKernel(coalesce(terms), start, kernel.support_end + delay, kernel.real_valued)


@dataclass(frozen=True)
class PiecewiseKernel:
    """
    Sum of finite kernels on possibly different supports.

    `span`, when given, declares a support larger than the union of the
    pieces; the kernel is zero on the uncovered part.
    """
    pieces: Tuple[FiniteKernel, ...]
    span: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if self.span is None:
            if not pieces:
                raise DomainError("an empty piecewise kernel needs an explicit span")
            object.__setattr__(self, "span", (min(p.support_start for p in pieces),
                                              max(p.support_end for p in pieces)))
        else:
            lo, hi = (_finite_real(x, "span") for x in self.span)
            if not 0 <= lo < hi:
                raise DomainError("invalid span [%g, %g]" % (lo, hi))
            if any(p.support_start < lo or p.support_end > hi for p in pieces):
                raise DomainError("span [%g, %g] does not cover every piece" % (lo, hi))
            object.__setattr__(self, "span", (lo, hi))

    def __call__(self, t, precise: Optional[bool] = None):
        scalar = onp.ndim(t) == 0
        t = onp.asarray(t, dtype=onp.float64)
        out = onp.zeros(t.shape, dtype=onp.complex128)
        for piece in self.pieces:
            out = out + eval_kernel(piece, t, precise)
        if scalar:
            return complex(out)
        return out

    @property
    def support(self) -> Tuple[float, float]:
        return self.span

    @property
    def support_start(self) -> float:
        return self.span[0]

    @property
    def support_end(self) -> float:
        return self.span[1]

    @property
    def length(self) -> float:
        return self.span[1] - self.span[0]

    @property
    def real_valued(self) -> bool:
        return all(p.real_valued for p in self.pieces)

    @property
    def stability(self) -> StabilityClass:
        if all(p.stability is StabilityClass.STABLE for p in self.pieces):
            return StabilityClass.STABLE
        return StabilityClass.UNSTABLE

    @property
    def mass(self) -> float:
        return sum(p.mass for p in self.pieces)

    def breakpoints(self):
        points = {self.span[0], self.span[1]}
        for p in self.pieces:
            points.update(p.support)
        return sorted(points)

    def segments(self):
        """Yield one FiniteKernel per gap between consecutive breakpoints.

        Each segment carries the merged terms of every piece covering it,
        so it is smooth on its closed interval.
        """
        points = self.breakpoints()
        for lo, hi in zip(points[:-1], points[1:]):
            covering = [p for p in self.pieces if p.support_start <= lo and p.support_end >= hi]
            if not covering:
                continue
            terms = coalesce(t for p in covering for t in p.terms)
            if terms:
                yield FiniteKernel(terms, lo, hi, all(p.real_valued for p in covering))

    def scale(self, a: complex) -> "PiecewiseKernel":
        return PiecewiseKernel(tuple(p.scale(a) for p in self.pieces), self.span)


KernelLike = Union[FiniteKernel, PiecewiseKernel]


def pieces_of(kernel: KernelLike) -> Tuple[FiniteKernel, ...]:
    if isinstance(kernel, PiecewiseKernel):
        return kernel.pieces
    return (kernel,)


def zero_extend(kernel: KernelLike, start: float, end: float) -> PiecewiseKernel:
    """View `kernel` as a kernel on the larger support [start, end]."""
    if start > kernel.support_start or end < kernel.support_end:
        raise DomainError("[%g, %g] does not contain the support [%g, %g]"
                          % (start, end, kernel.support_start, kernel.support_end))
    return PiecewiseKernel(pieces_of(kernel), (start, end))


def difference(f: KernelLike, g: KernelLike) -> KernelLike:
    """f - g, as a FiniteKernel when the supports agree."""
    if isinstance(f, FiniteKernel) and isinstance(g, FiniteKernel) and _same_support(f, g):
        return scale_add(1.0, f, -1.0, g)
    span = (min(f.support_start, g.support_start), max(f.support_end, g.support_end))
    return PiecewiseKernel(pieces_of(f) + tuple(p.scale(-1.0) for p in pieces_of(g)), span)


@dataclass(frozen=True)
class AtomicDistribution:
    """Weighted Dirac impulses sum f_n delta(t - t_n)."""
    impulses: Tuple[Tuple[float, complex], ...] = ()

    def __post_init__(self):
        imps = tuple((_finite_real(t, "impulse time"), _finite_complex(f, "impulse weight"))
                     for t, f in self.impulses)
        times = [t for t, _ in imps]
        if any(t < 0 for t in times):
            raise DomainError("impulse times must be nonnegative")
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise DomainError("impulse times must be strictly increasing")
        object.__setattr__(self, "impulses", imps)

    @property
    def times(self):
        return onp.array([t for t, _ in self.impulses], dtype=onp.float64)

    @property
    def weights(self):
        return onp.array([f for _, f in self.impulses], dtype=onp.complex128)

    @property
    def total_weight(self) -> float:
        return float(sum(abs(f) for _, f in self.impulses))

    def transfer(self, s):
        s = onp.asarray(s, dtype=onp.complex128)
        if not self.impulses:
            return onp.zeros(s.shape, dtype=onp.complex128)
        return (self.weights * onp.exp(-s[..., None] * self.times)).sum(-1)
