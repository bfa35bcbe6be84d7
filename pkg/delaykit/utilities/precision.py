"""Helpers for the high-precision evaluation path.

Exponential sums with a large coefficient mass lose digits to cancellation
when summed in double precision. Those sums are evaluated with mpmath at a
precision sized to the mass and rounded back to complex128 at the end.

Every call works in its own `MPContext`, so concurrent sweeps never share
the global mpmath precision.
"""

import math

import mpmath as mp
import numpy as onp

from . import defaults

EPS = 2.0 ** -52


def rounding_floor(mass: float) -> float:
    return EPS * mass


def is_exact(z) -> bool:
    """True for mpmath numbers, which carry a coefficient beyond complex128."""
    return hasattr(z, "_mpc_") or hasattr(z, "_mpf_")


def relative_precision(z) -> float:
    if is_exact(z):
        return 10.0 ** -z.context.dps
    return EPS


def needs_precise(mass: float) -> bool:
    return rounding_floor(mass) > defaults.precise_floor()


def working_dps(mass: float, extra: int = 20) -> int:
    return extra + max(0, int(math.ceil(math.log10(max(mass, 1.0)))))


def context(dps: int) -> mp.MPContext:
    ctx = mp.MPContext()
    ctx.dps = int(dps)
    return ctx


def to_mpc(z, ctx=mp.mp):
    z = complex(z)
    return ctx.mpc(z.real, z.imag)


def to_complex(z) -> complex:
    return complex(float(z.real), float(z.imag))


def exact_sum(values):
    """Sum in the context of the least precise mpmath summand; None without any."""
    values = list(values)
    contexts = [v.context for v in values if is_exact(v)]
    if not contexts:
        return None
    ctx = min(contexts, key=lambda c: c.prec)
    return ctx.fsum(values)


def exact_exp(like, lam: complex, t: float):
    """exp(lam t) in the context of `like`."""
    ctx = like.context
    return ctx.exp(to_mpc(lam, ctx) * ctx.mpf(float(t)))


def exp_poly_sum(terms, t, dps: int):
    """Evaluate sum(c * t**j * exp(lam * t)) at each point of `t`.

    `terms` is an iterable of (coeff, lam, power) triples; coeff may be an
    mpmath number. Terms sharing an exponent share one exponential per point.
    """
    t = onp.atleast_1d(onp.asarray(t, dtype=onp.float64))
    grouped = {}
    for coeff, lam, power in terms:
        grouped.setdefault(complex(lam), []).append((coeff, int(power)))
    out = onp.zeros(t.shape, dtype=onp.complex128)
    ctx = context(dps)
    mp_groups = [(to_mpc(lam, ctx), [(ctx.convert(c), j) for c, j in members])
                 for lam, members in grouped.items()]
    for idx, tv in enumerate(t.flat):
        tm = ctx.mpf(float(tv))
        acc = ctx.mpc(0)
        for lam, members in mp_groups:
            poly = ctx.mpc(0)
            for c, j in members:
                poly += c * tm ** j
            acc += poly * ctx.exp(lam * tm)
        out.flat[idx] = to_complex(acc)
    return out
