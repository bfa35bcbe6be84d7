"""
Laplace transforms of elementary distributed delays and the decomposition
of a kernel into elementary delays.

The transform of theta_lam^k(t) = (-t)**k exp(lam t) on [0, theta] is the
k-th derivative of (1 - exp(-(s - lam) theta)) / (s - lam), an entire
function of s. It is evaluated by

  * its power series when |s - lam| theta < series_radius(),
  * the closed form otherwise, whose bracket
        1 - exp(-w) * sum_{n<=k} w**n / n!,  w = (s - lam) theta
    is summed as the equal tail exp(-w) * sum_{n>k} w**n / n! while |w| <= 1.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Tuple

import jax.numpy as np
import numpy as onp

from ..errors import DomainError, RangeError
from ..kernels.base import (ExpPolyTerm, FiniteKernel, KernelLike, PiecewiseKernel, coalesce,
                            shift_support, _close)
from ..kernels.quadrature import integrate_kernel
from ..utilities import defaults
from ..utilities.precision import (context, exact_exp, exact_sum, needs_precise, to_complex, to_mpc,
                                   working_dps)

logger = logging.getLogger(__name__)

_SERIES_TERMS = 16
_TAIL_TERMS = 40


def _series(z, theta, k):
    # (-1)^k sum_m (-z theta)^m / m! * theta^(k+1) / (k+m+1)
    acc = np.zeros_like(z)
    p = np.ones_like(z)
    for m in range(_SERIES_TERMS):
        acc = acc + p / (k + m + 1)
        p = p * (-z * theta) / (m + 1)
    return (-1.0) ** k * theta ** (k + 1) * acc


def _bracket_tail(w, k):
    q = w ** (k + 1) / math.factorial(k + 1)
    acc = np.zeros_like(w)
    for n in range(k + 1, k + 1 + _TAIL_TERMS):
        acc = acc + q
        q = q * w / (n + 1)
    return np.exp(-w) * acc


def _bracket_direct(w, k):
    q = np.ones_like(w)
    acc = np.zeros_like(w)
    for n in range(k + 1):
        acc = acc + q
        q = q * w / (n + 1)
    return 1.0 - np.exp(-w) * acc


def theta_hat(lam: complex, theta: float, k: int, s):
    """k-th derivative of the transform of exp(lam t) on [0, theta], at s.

    `s` may be a scalar or an array; the result has the same shape.
    """
    if not theta > 0:
        raise DomainError("theta must be positive, got %r" % (theta,))
    if int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer, got %r" % (k,))
    k = int(k)
    s = np.asarray(s, dtype=np.complex128)
    z = s - complex(lam)
    w = z * theta
    aw = np.abs(w)
    near = aw < defaults.series_radius()
    z_safe = np.where(near, 1.0, z)
    w_safe = z_safe * theta
    bracket = np.where(aw <= 1.0, _bracket_tail(w_safe, k), _bracket_direct(w_safe, k))
    closed = (-1.0) ** k * math.factorial(k) * bracket / z_safe ** (k + 1)
    return np.where(near, _series(z, theta, k), closed)


def theta_hat_mp(ctx, lam, theta, k: int, s):
    """theta_hat at the precision of the mpmath context `ctx`, for a scalar s."""
    z = ctx.mpc(s) - ctx.mpc(lam)
    theta = ctx.mpf(theta)
    small = ctx.mpf(10) ** (-ctx.dps - 2)
    w = z * theta
    if abs(w) < defaults.series_radius():
        acc, p, m = ctx.mpc(0), ctx.mpc(1), 0
        while True:
            term = p / (k + m + 1)
            acc += term
            if abs(term) < small * abs(acc):
                break
            m += 1
            p = p * (-w) / m
        return (-1) ** k * theta ** (k + 1) * acc
    if abs(w) <= 1:
        q = w ** (k + 1) / ctx.factorial(k + 1)
        acc, n = ctx.mpc(0), k + 1
        while acc == 0 or abs(q) > small * abs(acc):
            acc += q
            q = q * w / (n + 1)
            n += 1
        bracket = ctx.exp(-w) * acc
    else:
        q, acc = ctx.mpc(1), ctx.mpc(0)
        for n in range(k + 1):
            acc += q
            q = q * w / (n + 1)
        bracket = 1 - ctx.exp(-w) * acc
    return (-1) ** k * ctx.factorial(k) * bracket / z ** (k + 1)


@dataclass(frozen=True)
class ElementaryComponent:
    """Quasipolynomial weight sum_d coeff e^{-s d} times theta_hat(lam, theta, k, s).

    `exact`, aligned with `weight`, holds mpmath coefficients (or None) for
    weights that come from approximants.
    """
    lam: complex
    k: int
    weight: Tuple[Tuple[float, complex], ...]
    exact: Optional[Tuple[Any, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        if int(self.k) != self.k or self.k < 0:
            raise DomainError("k must be a nonnegative integer, got %r" % (self.k,))
        object.__setattr__(self, "k", int(self.k))
        if self.exact is not None:
            if len(self.exact) != len(self.weight):
                raise DomainError("exact weights must align with the weight terms")
            if all(e is None for e in self.exact):
                object.__setattr__(self, "exact", None)
            else:
                object.__setattr__(self, "exact", tuple(self.exact))
                object.__setattr__(self, "weight", tuple((d, c if e is None else to_complex(e))
                                                         for (d, c), e in zip(self.weight, self.exact)))
        weight = tuple((float(d), complex(c)) for d, c in self.weight)
        delays = [d for d, _ in weight]
        if any(d < 0 or not math.isfinite(d) for d in delays):
            raise DomainError("weight delays must be finite and nonnegative")
        if any(b <= a for a, b in zip(delays[:-1], delays[1:])):
            raise DomainError("weight delays must be strictly increasing")
        if any(not (math.isfinite(c.real) and math.isfinite(c.imag)) for _, c in weight):
            raise DomainError("weight coefficients must be finite")
        object.__setattr__(self, "weight", weight)

    @property
    def weight_norm(self) -> float:
        """A-norm of the quasipolynomial weight."""
        return float(sum(abs(c) for _, c in self.weight))

    def weight_values(self):
        """(delay, coefficient) pairs at the best precision available."""
        if self.exact is None:
            return list(self.weight)
        return [(d, c if e is None else e) for (d, c), e in zip(self.weight, self.exact)]

    def weight_at(self, s):
        s = np.asarray(s, dtype=np.complex128)
        total = np.zeros_like(s)
        for d, c in self.weight:
            total = total + c * np.exp(-s * d)
        return total


@dataclass(frozen=True)
class Decomposition:
    theta: float
    components: Tuple[ElementaryComponent, ...]
    real_valued: bool = False

    def __post_init__(self):
        if not self.theta > 0 or not math.isfinite(self.theta):
            raise DomainError("theta must be positive and finite, got %r" % (self.theta,))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def mass(self) -> float:
        """Bound on the summands of the transfer on the closed right half-plane."""
        total = 0.0
        for comp in self.components:
            growth = math.exp(min(700.0, max(comp.lam.real, 0.0) * self.theta))
            total += comp.weight_norm * self.theta ** (comp.k + 1) * growth
        return total

    @property
    def delays(self) -> List[float]:
        return sorted({d for comp in self.components for d, _ in comp.weight})

    def transfer(self, s):
        return transfer_eval(self, s)

    def evaluate(self, t):
        """Time-domain reconstruction sum coeff * theta_lam^k(t - d)."""
        scalar = onp.ndim(t) == 0
        t = onp.asarray(t, dtype=onp.float64)
        out = onp.zeros(t.shape, dtype=onp.complex128)
        for comp in self.components:
            for d, c in comp.weight:
                tau = t - d
                inside = (tau >= 0) & (tau <= self.theta)
                with onp.errstate(over="ignore", invalid="ignore"):
                    val = c * (-tau) ** comp.k * onp.exp(comp.lam * tau)
                out = out + onp.where(inside, val, 0.0)
        if scalar:
            return complex(out)
        return out

    def to_kernel(self) -> KernelLike:
        """Inverse of `decompose`: one kernel piece per distinct delay."""
        pieces = []
        for d in self.delays:
            terms = [ExpPolyTerm(1.0, comp.lam, comp.k).scaled(c * (-1.0) ** comp.k)
                     for comp in self.components for dd, c in comp.weight_values() if dd == d]
            base = FiniteKernel(coalesce(terms), 0.0, self.theta, self.real_valued)
            pieces.append(shift_support(base, d))
        if len(pieces) == 1:
            return pieces[0]
        return PiecewiseKernel(tuple(pieces))


def _decompose_finite(kernel: FiniteKernel) -> Decomposition:
    a = kernel.support_start
    # t^j e^{lam t} on [a, a + theta] in the shifted variable tau = t - a
    shifted = []
    for term in kernel.terms:
        factor = exact_exp(term.exact, term.lam, a) if term.exact is not None else complex(onp.exp(term.lam * a))
        scaled = term.scaled(factor)
        for m in range(term.power + 1):
            shifted.append(replace(scaled.scaled(math.comb(term.power, m) * a ** (term.power - m)), power=m))
    components = []
    for t in coalesce(shifted):
        sign = (-1.0) ** t.power
        exact = (t.exact * sign,) if t.exact is not None else None
        components.append(ElementaryComponent(t.lam, t.power, ((a, t.coeff * sign),), exact))
    components = tuple(components)
    return Decomposition(kernel.length, components, kernel.real_valued)


def _merge(decs: List[Decomposition]) -> Decomposition:
    theta = decs[0].theta
    tol = defaults.coalesce_tol()
    slots: List[list] = []  # [lam, k, {delay: [coeff, ...]}]
    for dec in decs:
        if abs(dec.theta - theta) > tol * max(1.0, theta):
            raise DomainError("pieces must share one base length to be decomposed together")
        for comp in dec.components:
            for slot in slots:
                if slot[1] == comp.k and _close(slot[0], comp.lam, tol):
                    break
            else:
                slot = [comp.lam, comp.k, {}]
                slots.append(slot)
            for d, c in comp.weight_values():
                slot[2].setdefault(d, []).append(c)
    components = []
    for lam, k, w in slots:
        delays = sorted(w)
        exact = tuple(exact_sum(w[d]) for d in delays)
        weight = tuple((d, complex(sum(complex(c) for c in w[d]))) for d in delays)
        components.append(ElementaryComponent(lam, k, weight, exact))
    components = tuple(components)
    return Decomposition(theta, components, all(d.real_valued for d in decs))


def decompose(kernel: KernelLike) -> Decomposition:
    """Write a kernel as delayed, weighted elementary delays on [0, theta]."""
    pieces = kernel.pieces if isinstance(kernel, PiecewiseKernel) else (kernel,)
    pieces = [p for p in pieces if p.terms]
    if not pieces:
        raise DomainError("cannot decompose an empty kernel")
    decs = [_decompose_finite(p) for p in pieces]
    dec = decs[0] if len(decs) == 1 else _merge(decs)
    logger.debug("decomposed kernel into %d components over theta=%g", len(dec.components), dec.theta)
    return dec


def _transfer_precise(dec: Decomposition, s: onp.ndarray) -> onp.ndarray:
    out = onp.zeros(s.shape, dtype=onp.complex128)
    ctx = context(working_dps(dec.mass))
    comps = [(to_mpc(c.lam, ctx), c.k, [(ctx.mpf(d), ctx.convert(w)) for d, w in c.weight_values()])
             for c in dec.components]
    for idx, sv in enumerate(s.flat):
        sm = to_mpc(sv, ctx)
        acc = ctx.mpc(0)
        for lam, k, weight in comps:
            wsum = ctx.fsum(w * ctx.exp(-sm * d) for d, w in weight)
            acc += wsum * theta_hat_mp(ctx, lam, dec.theta, k, sm)
        out.flat[idx] = to_complex(acc)
    return out


def transfer_eval(dec: Decomposition, s):
    """Transfer function of the decomposed kernel at s (scalar or array)."""
    scalar = onp.ndim(s) == 0
    s_arr = onp.asarray(s, dtype=onp.complex128)
    if needs_precise(dec.mass):
        values = _transfer_precise(dec, s_arr)
    else:
        total = np.zeros(s_arr.shape, dtype=np.complex128)
        for comp in dec.components:
            total = total + comp.weight_at(s_arr) * theta_hat(comp.lam, dec.theta, comp.k, s_arr)
        values = onp.asarray(total)
    if not onp.all(onp.isfinite(values)):
        raise RangeError("transfer overflow at s with Re s down to %g" % float(onp.min(s_arr.real)))
    if scalar:
        return complex(values)
    return values


def numeric_laplace(kernel: KernelLike, s: complex, tol: float = 1e-10) -> complex:
    """Finite Laplace integral of the kernel by adaptive quadrature."""
    s = complex(s)
    return integrate_kernel(kernel, lambda t: onp.exp(-s * t), tol)
