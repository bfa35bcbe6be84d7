"""
State-space realization of stable kernels with an input delay.

Each term c t^j exp(lam t) on [0, theta] becomes a Jordan chain of size j+1
driven by u(t) at its head. The delayed input u(t - theta) is injected along
the chain with the coefficients of the expansion of (t + theta)^j
exp(lam (t + theta)), which cancels the response beyond theta:

    x_0' = lam x_0 + u(t) - exp(lam theta) u(t - theta)
    x_m' = lam x_m + x_{m-1} - exp(lam theta) theta^m / m! u(t - theta)
    y    = c j! x_j
"""

import logging
import math
from dataclasses import dataclass
from typing import List

import jax.numpy as np
import numpy as onp
from scipy import linalg

from ..errors import DomainError
from ..kernels.base import FiniteKernel, StabilityClass
from ..laplace.frequency import BodePoint, FrequencyGrid, frequency_response

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DelayStateSpace:
    A: onp.ndarray
    B0: onp.ndarray
    Bd: onp.ndarray
    C: onp.ndarray
    theta: float
    D0: complex = 0.0
    Dd: complex = 0.0
    real_valued: bool = False

    def __post_init__(self):
        A = onp.atleast_2d(onp.asarray(self.A, dtype=onp.complex128))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DomainError("A must be square, got shape %s" % (A.shape,))
        vecs = []
        for name in ("B0", "Bd", "C"):
            v = onp.asarray(getattr(self, name), dtype=onp.complex128).reshape(-1)
            if v.shape != (n,):
                raise DomainError("%s must have %d entries, got %d" % (name, n, v.size))
            vecs.append(v)
        if not self.theta > 0:
            raise DomainError("theta must be positive, got %r" % (self.theta,))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B0", vecs[0])
        object.__setattr__(self, "Bd", vecs[1])
        object.__setattr__(self, "C", vecs[2])
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def poles(self) -> onp.ndarray:
        return onp.linalg.eigvals(self.A)

    def transfer(self, s):
        """C (sI - A)^{-1} (B0 + Bd exp(-s theta)) + D0 + Dd exp(-s theta)."""
        scalar = onp.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=np.complex128))
        eye = np.eye(self.order, dtype=np.complex128)
        delay = np.exp(-s * self.theta)
        M = s[:, None, None] * eye - self.A
        rhs = self.B0[None, :] + delay[:, None] * self.Bd[None, :]
        x = np.linalg.solve(M, rhs[..., None])[..., 0]
        values = onp.asarray(x @ self.C + self.D0 + self.Dd * delay)
        if scalar:
            return complex(values[0])
        return values

    def frequency_response(self, grid: FrequencyGrid) -> List[BodePoint]:
        return frequency_response(self, grid)

    def impulse_response(self, t):
        """C e^{At} B0 for t >= 0, minus C e^{A(t - theta)} Bd once t > theta."""
        t = onp.atleast_1d(onp.asarray(t, dtype=onp.float64))
        out = onp.zeros(t.shape, dtype=onp.complex128)
        for i, ti in enumerate(t):
            if ti < 0:
                continue
            val = self.C @ linalg.expm(self.A * ti) @ self.B0
            if ti > self.theta:
                val = val + self.C @ linalg.expm(self.A * (ti - self.theta)) @ self.Bd
            out[i] = val
        if self.real_valued:
            return out.real
        return out


def realize(kernel: FiniteKernel) -> DelayStateSpace:
    if not isinstance(kernel, FiniteKernel):
        raise DomainError("realize needs a single-interval kernel")
    if kernel.support_start != 0.0:
        raise DomainError("realize needs support [0, theta]; got start %g" % kernel.support_start)
    if kernel.stability is not StabilityClass.STABLE:
        raise DomainError("kernel has terms with Re(lambda) >= 0 and cannot be realized; "
                          "approximate it first (delaykit approx)")
    if not kernel.terms:
        raise DomainError("cannot realize an empty kernel")
    theta = kernel.length
    size = sum(t.power + 1 for t in kernel.terms)
    A = onp.zeros((size, size), dtype=onp.complex128)
    B0 = onp.zeros(size, dtype=onp.complex128)
    Bd = onp.zeros(size, dtype=onp.complex128)
    C = onp.zeros(size, dtype=onp.complex128)
    pos = 0
    for term in kernel.terms:
        j, lam = term.power, term.lam
        gain = complex(onp.exp(lam * theta))
        for m in range(j + 1):
            A[pos + m, pos + m] = lam
            if m > 0:
                A[pos + m, pos + m - 1] = 1.0
            Bd[pos + m] = -gain * theta ** m / math.factorial(m)
        B0[pos] = 1.0
        C[pos + j] = term.coeff * math.factorial(j)
        pos += j + 1
    logger.debug("realized %d terms as a %d-state system with delay %g", len(kernel.terms), size, theta)
    return DelayStateSpace(A, B0, Bd, C, theta, real_valued=kernel.real_valued)
