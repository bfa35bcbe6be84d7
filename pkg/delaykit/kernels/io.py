"""JSON interchange format for kernels and atomic distributions."""

import json
from typing import Any, Dict

import mpmath as mp

from ..errors import DomainError
from ..utilities.precision import context
from .base import AtomicDistribution, ExpPolyTerm, FiniteKernel, KernelLike, PiecewiseKernel


def _pair(z: complex):
    z = complex(z)
    return [z.real, z.imag]


def _complex(value, name) -> complex:
    try:
        re, im = value
        return complex(float(re), float(im))
    except (TypeError, ValueError):
        raise DomainError("%s must be a [re, im] pair, got %r" % (name, value))


def _term_to_dict(t: ExpPolyTerm) -> Dict[str, Any]:
    data = {"c": _pair(t.coeff), "lambda": _pair(t.lam), "j": t.power}
    if t.exact is not None:
        digits = t.exact.context.dps
        data["exact"] = [mp.nstr(t.exact.real, digits), mp.nstr(t.exact.imag, digits)]
        data["digits"] = digits
    return data


def _exact(t: Dict[str, Any], name):
    if "exact" not in t:
        return None
    try:
        ctx = context(int(t["digits"]))
        re, im = t["exact"]
        return ctx.mpc(ctx.mpf(str(re)), ctx.mpf(str(im)))
    except (KeyError, TypeError, ValueError):
        raise DomainError("%s.exact must be a [re, im] pair of decimal strings with 'digits'" % name)


def kernel_to_dict(kernel: KernelLike) -> Dict[str, Any]:
    if isinstance(kernel, PiecewiseKernel):
        return {"span": list(kernel.span), "pieces": [kernel_to_dict(p) for p in kernel.pieces]}
    return {
        "support": [kernel.support_start, kernel.support_end],
        "real": kernel.real_valued,
        "terms": [_term_to_dict(t) for t in kernel.terms],
    }


def kernel_from_dict(data: Dict[str, Any]) -> KernelLike:
    if not isinstance(data, dict):
        raise DomainError("kernel JSON must be an object")
    if "pieces" in data:
        return PiecewiseKernel(tuple(kernel_from_dict(p) for p in data["pieces"]),
                               tuple(data["span"]) if "span" in data else None)
    try:
        start, end = data["support"]
        raw_terms = data.get("terms", [])
        real = bool(data.get("real", False))
    except (KeyError, TypeError, ValueError):
        raise DomainError("kernel JSON needs a two-element 'support' and a 'terms' list")
    terms = []
    for i, t in enumerate(raw_terms):
        try:
            terms.append(ExpPolyTerm(_complex(t["c"], "terms[%d].c" % i),
                                     _complex(t["lambda"], "terms[%d].lambda" % i),
                                     int(t.get("j", 0)), _exact(t, "terms[%d]" % i)))
        except (KeyError, TypeError):
            raise DomainError("terms[%d] needs 'c' and 'lambda'" % i)
    return FiniteKernel(tuple(terms), start, end, real)


def atomic_to_dict(dist: AtomicDistribution) -> Dict[str, Any]:
    return {"impulses": [[t, f.real, f.imag] for t, f in dist.impulses]}


def atomic_from_dict(data: Dict[str, Any]) -> AtomicDistribution:
    try:
        return AtomicDistribution(tuple((float(t), complex(float(re), float(im)))
                                        for t, re, im in data["impulses"]))
    except (KeyError, TypeError, ValueError):
        raise DomainError("atomic JSON needs 'impulses' as [[t, re, im], ...]")


def dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(path: str, data: Dict[str, Any]) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(data))


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError("cannot read JSON from %s: %s" % (path, exc))


def load_kernel(path: str) -> KernelLike:
    data = read_json(path)
    # approximant files carry the kernel fields at the top level
    return kernel_from_dict(data)


def kernel_to_json(kernel: KernelLike) -> str:
    return dumps(kernel_to_dict(kernel))


def kernel_from_json(text: str) -> KernelLike:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError("invalid kernel JSON: %s" % exc)
    return kernel_from_dict(data)
