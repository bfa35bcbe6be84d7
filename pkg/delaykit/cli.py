"""
Command-line front end.

    delaykit approx          build an approximant, optionally sweep the order
    delaykit bode            Bode data and frequency-domain error report
    delaykit simulate        open-loop simulation of a kernel
    delaykit demo-stabilize  step responses of the stabilized delayed plant
    delaykit norms           L1 norm, A-distance and atomic distance

Exit codes: 0 success, 2 invalid input, 3 accuracy not achieved,
4 simulation diverged, 5 numerical failure.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as onp

from . import __version__
from .approx import (ApproxConfig, approx_derivative, approx_kernel, approx_theta_lambda, error_sweep,
                     lowpass_from_dict, lowpass_lumped, select_order)
from .errors import DelayKitError, DomainError, NumericalError
from .kernels import (AtomicDistribution, KernelLike, atomic_from_dict, elementary_kernel, kernel_from_dict,
                      l1_norm, load_kernel, read_json, write_json, dumps)
from .laplace import FrequencyGrid, decompose, frequency_response, write_bode_csv
from .metrics import a_norm_distance, atomic_distance, check_grid, frequency_error
from .sim import SimConfig, closed_loop_demo, convolve_direct, from_csv, realize, simulate_block, sine, step
from .utilities import default_threads

logger = logging.getLogger(__name__)


def _configure_logging(verbose: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    env = os.environ.get("DELAYKIT_LOG_LEVEL")
    if env:
        level = logging.getLevelName(env.upper())
        if not isinstance(level, int):
            raise DomainError("DELAYKIT_LOG_LEVEL must be a logging level name, got %r" % env)
    logging.getLogger("delaykit").setLevel(level)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise DomainError("cannot read %r as a complex number" % text)


def _add_kernel_args(parser):
    group = parser.add_argument_group("kernel")
    group.add_argument("--kernel", help="kernel or approximant JSON file")
    group.add_argument("--lambda", dest="lam", help="exponent of the inline kernel (-t)^k exp(lambda t); "
                       "write negative values as --lambda=-1+2j")
    group.add_argument("--theta", type=float, help="support length of the inline kernel")
    group.add_argument("--power", type=int, default=0, help="k of the inline kernel")


def _inline(args):
    if args.lam is None:
        return None
    if args.theta is None:
        raise DomainError("--lambda needs --theta")
    return _complex(args.lam), args.theta, args.power


def _kernel(args) -> KernelLike:
    if args.kernel is not None:
        return load_kernel(args.kernel)
    inline = _inline(args)
    if inline is None:
        raise DomainError("give --kernel FILE or --lambda/--theta")
    return elementary_kernel(*inline)


def _parse_sweep(text: str) -> List[int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise DomainError("--sweep expects FIRST:LAST, got %r" % text)
    if not 1 <= lo <= hi:
        raise DomainError("--sweep needs 1 <= FIRST <= LAST, got %r" % text)
    return list(range(lo, hi + 1))


def _emit_json(data, path: Optional[str]):
    if path is None:
        sys.stdout.write(dumps(data))
    else:
        write_json(path, data)


def cmd_approx(args) -> int:
    inline = _inline(args)
    if args.lowpass_a is not None:
        if inline is None:
            raise DomainError("--lowpass-a needs an inline --lambda/--theta kernel")
        lumped = lowpass_lumped(inline[0], inline[1], args.lowpass_a, args.taps)
        logger.info("low-pass fit residual %.3e", lumped.residual)
        _emit_json(lumped.to_dict(), args.out)
        return 0

    if args.sweep is not None:
        if inline is None or inline[2] != 0:
            raise DomainError("--sweep needs an inline elementary kernel (--lambda/--theta, power 0)")
        rows = error_sweep(inline[0], inline[1], args.alpha, _parse_sweep(args.sweep), args.residual,
                           default_threads())
        with open(args.sweep_csv, "w") as fh:
            fh.write("n,l1_error\n")
            for n, eps in rows:
                fh.write("%d,%.9e\n" % (n, eps))
        logger.info("wrote %d sweep rows to %s", len(rows), args.sweep_csv)

    if args.eps is not None:
        if inline is None:
            raise DomainError("--eps needs an inline --lambda/--theta kernel")
        lam, theta, k = inline
        app = approx_derivative(select_order(lam, theta, args.alpha, args.eps / theta ** k, args.n_max,
                                             args.residual), k)
    else:
        cfg = ApproxConfig(args.alpha, args.order, residual=args.residual)
        if inline is not None:
            app = approx_derivative(approx_theta_lambda(inline[0], inline[1], cfg), inline[2])
        else:
            app, bound = approx_kernel(decompose(_kernel(args)), cfg)
            logger.info("error bound %.3e", bound)
    logger.info("approximant order %d, measured eps %.3e", app.order, app.measured_eps)
    _emit_json(app.to_dict(), args.out)
    return 0


def _transfer_source(path: str):
    data = read_json(path)
    if "taps" in data:
        return lowpass_from_dict(data)
    return decompose(kernel_from_dict(data))


def cmd_bode(args) -> int:
    sources = [_transfer_source(p) for p in (args.kernel or [])]
    inline = _inline(args)
    if inline is not None:
        sources.insert(0, decompose(elementary_kernel(*inline)))
    if not 1 <= len(sources) <= 2:
        raise DomainError("bode takes one or two inputs, got %d" % len(sources))
    grid = FrequencyGrid.logspace(args.wmin, args.wmax, args.per_decade)
    check_grid(grid)
    for i, src in enumerate(sources, 1):
        write_bode_csv("%s_%d.csv" % (args.out, i), frequency_response(src, grid))
    if len(sources) == 2:
        report = frequency_error(sources[0], sources[1], grid)
        write_json("%s_report.json" % args.out, report.to_dict())
    return 0


def _signal(args):
    if args.input == "step":
        return step(args.amplitude)
    if args.input == "sine":
        return sine(args.omega, args.amplitude)
    if args.input.startswith("csv:"):
        return from_csv(args.input[4:])
    raise DomainError("--input must be step, sine or csv:PATH, got %r" % args.input)


def cmd_simulate(args) -> int:
    kernel = _kernel(args)
    signal = _signal(args)
    cfg = SimConfig(args.dt, args.horizon)
    if args.realize:
        trace = simulate_block(realize(kernel), signal, cfg)
    else:
        trace = convolve_direct(kernel, signal, cfg)
    if args.oracle:
        oracle = convolve_direct(kernel, signal, cfg)
        trace.signals["y_oracle"] = oracle["y"]
        logger.info("sup difference to the convolution oracle: %.3e", trace.sup_diff(oracle))
    trace.to_csv(args.out)
    return 0


def cmd_demo_stabilize(args) -> int:
    if args.order is None and args.eps is None:
        raise DomainError("give --order or --eps")
    cfg = SimConfig(args.dt, args.horizon)
    ideal, app, summary = closed_loop_demo(args.order, cfg, eps=args.eps, alpha=args.alpha)
    ideal.to_csv("%s_ideal.csv" % args.out)
    app.to_csv("%s_app.csv" % args.out)
    write_json("%s_summary.json" % args.out, summary.to_dict())
    if not summary.stable:
        logger.warning("small-gain margin %.3f does not certify the loop", summary.margin)
    return 0


def cmd_norms(args) -> int:
    kernel = _kernel(args)
    result = {"l1": l1_norm(kernel, args.tol)}
    if args.other is not None:
        result["a_distance"] = a_norm_distance(kernel, load_kernel(args.other), args.tol)
    if args.atomic is not None:
        dist: AtomicDistribution = atomic_from_dict(read_json(args.atomic))
        result["atomic_distance"] = atomic_distance(kernel, dist, args.tol)
    sys.stdout.write(dumps(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaykit", description=__doc__.splitlines()[1].strip())
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="build a stable approximant")
    _add_kernel_args(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--eps", type=float, help="select the order for this measured L1 error")
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--residual", choices=("shift", "theta0"), default="shift")
    p.add_argument("--sweep", help="FIRST:LAST orders for the error-vs-order table")
    p.add_argument("--sweep-csv", default="sweep.csv")
    p.add_argument("--lowpass-a", type=float, help="build the low-pass lumped variant with this pole")
    p.add_argument("--taps", type=int, default=10)
    p.add_argument("--out", help="approximant JSON (stdout when omitted)")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("bode", help="Bode data and frequency-domain error report")
    p.add_argument("--kernel", action="append", help="kernel, approximant or low-pass JSON (up to two)")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--theta", type=float)
    p.add_argument("--power", type=int, default=0)
    p.add_argument("--wmin", type=float, default=1e-2)
    p.add_argument("--wmax", type=float, default=1e3)
    p.add_argument("--per-decade", type=int, default=50)
    p.add_argument("--out", default="bode", help="output prefix")
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("simulate", help="open-loop simulation")
    _add_kernel_args(p)
    p.add_argument("--input", default="step", help="step, sine or csv:PATH")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--realize", action="store_true", help="simulate the state-space realization")
    p.add_argument("--oracle", action="store_true", help="add the direct convolution as y_oracle")
    p.add_argument("--out", default="trace.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo-stabilize", help="stabilize exp(-s)/(s-1) with an approximated controller")
    p.add_argument("--order", type=int, help="controller approximant order; 0 drops the distributed delay")
    p.add_argument("--eps", type=float, help="select the order for this measured error")
    p.add_argument("--alpha", type=float)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--out", default="demo", help="output prefix")
    p.set_defaults(func=cmd_demo_stabilize)

    p = sub.add_parser("norms", help="L1 norm and A-distances")
    _add_kernel_args(p)
    p.add_argument("--other", help="second kernel JSON for the A-distance")
    p.add_argument("--atomic", help="impulse list JSON for the atomic distance")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_norms)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging(args.verbose)
        return args.func(args)
    except DelayKitError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return 2
    except (onp.linalg.LinAlgError, ArithmeticError) as exc:
        err = NumericalError("%s: %s" % (type(exc).__name__, exc))
        logger.error("NumericalError: %s", err)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
