"""A-norm distances and graph balls around stable kernels."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as onp

from ..errors import DomainError
from ..kernels.base import AtomicDistribution, KernelLike, difference
from ..kernels.quadrature import l1_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphBall:
    center: KernelLike
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise DomainError("radius must be positive, got %r" % (self.radius,))


def a_norm_distance(f: KernelLike, g: KernelLike, tol: float = 1e-10) -> float:
    """||f - g||_A of two atom-free kernels, zero-extended to their joint support."""
    return l1_norm(difference(f, g), tol)


def in_ball(f: KernelLike, ball: GraphBall, tol: float = 1e-10) -> bool:
    return a_norm_distance(f, ball.center, tol) <= ball.radius + tol


def atomic_distance(g: KernelLike, p: AtomicDistribution, tol: float = 1e-10) -> float:
    """||g - p||_A = ||g||_L1 + sum |p_i|: no impulse train cancels any of g."""
    return l1_norm(g, tol) + p.total_weight


def integral_atomic_approximation(kernel: KernelLike, nodes: Sequence[float]) -> AtomicDistribution:
    """Trapezoidal impulse train sum w_i kernel(t_i) delta(t - t_i).

    It reproduces the action of the kernel on smooth inputs, yet its A-distance
    to the kernel is never below ||kernel||_L1.
    """
    nodes = onp.asarray(nodes, dtype=onp.float64)
    if nodes.ndim != 1 or nodes.size < 2:
        raise DomainError("need at least two quadrature nodes")
    if onp.any(onp.diff(nodes) <= 0) or nodes[0] < 0:
        raise DomainError("nodes must be nonnegative and strictly increasing")
    widths = onp.diff(nodes)
    weights = onp.zeros(nodes.size)
    weights[:-1] += 0.5 * widths
    weights[1:] += 0.5 * widths
    values = onp.asarray(kernel(nodes)) * weights
    return AtomicDistribution(tuple(zip(nodes.tolist(), values.tolist())))
