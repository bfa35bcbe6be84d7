import os

from ..errors import DomainError


def coalesce_tol() -> float:
    return 1e-14


def max_power() -> int:
    return 64


def panel_cap() -> int:
    return 2 ** 20


def scan_points() -> int:
    return 64


def series_radius() -> float:
    return 0.05


def instability_threshold() -> float:
    return 1e6


def precise_floor() -> float:
    """Rounding floor above which evaluation switches to mpmath."""
    return 1e-12


def capacity_floor() -> float:
    """Largest admissible rounding floor of a constructed approximant."""
    return 5e-2


def warn_floor() -> float:
    return 1e-6


def max_binomial_order() -> int:
    return 1000


def max_working_digits() -> int:
    return 1000


def default_demo_alpha() -> float:
    return 0.1


def default_threads() -> int:
    raw = os.environ.get("DELAYKIT_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise DomainError("DELAYKIT_THREADS must be a positive integer, got %r" % raw)
    if threads < 1:
        raise DomainError("DELAYKIT_THREADS must be a positive integer, got %r" % raw)
    return threads
