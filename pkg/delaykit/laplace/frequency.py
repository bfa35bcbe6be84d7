"""Frequency grids, Bode data and the Bode CSV format."""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence

import numpy as onp

from ..errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrequencyGrid:
    omegas: Sequence[float]

    def __post_init__(self):
        omegas = tuple(float(w) for w in self.omegas)
        if any(not math.isfinite(w) for w in omegas):
            raise DomainError("grid frequencies must be finite")
        if any(b <= a for a, b in zip(omegas[:-1], omegas[1:])):
            raise DomainError("grid frequencies must be strictly increasing")
        object.__setattr__(self, "omegas", omegas)

    @classmethod
    def logspace(cls, lo: float = 1e-2, hi: float = 1e3, per_decade: int = 50) -> "FrequencyGrid":
        if not 0 < lo < hi:
            raise DomainError("need 0 < lo < hi, got lo=%g hi=%g" % (lo, hi))
        if per_decade < 1:
            raise DomainError("per_decade must be positive, got %r" % (per_decade,))
        pts = int(round(math.log10(hi / lo) * per_decade)) + 1
        return cls(tuple(onp.logspace(math.log10(lo), math.log10(hi), max(pts, 2))))

    def __len__(self):
        return len(self.omegas)

    @property
    def array(self) -> onp.ndarray:
        return onp.asarray(self.omegas, dtype=onp.float64)


class BodePoint(NamedTuple):
    omega: float
    value: complex
    magnitude_db: float
    phase_rad: float


def frequency_response(system, grid: FrequencyGrid) -> List[BodePoint]:
    """Bode data of anything with a vectorized `transfer(s)` along s = i omega."""
    if not len(grid):
        raise DomainError("frequency grid is empty")
    omegas = grid.array
    values = onp.asarray(system.transfer(1j * omegas), dtype=onp.complex128)
    with onp.errstate(divide="ignore"):
        mag_db = 20.0 * onp.log10(onp.abs(values))
    phase = onp.unwrap(onp.angle(values))
    return [BodePoint(float(w), complex(v), float(m), float(p))
            for w, v, m, p in zip(omegas, values, mag_db, phase)]


def write_bode_csv(path: str, points: Sequence[BodePoint]) -> None:
    with open(path, "w") as fh:
        fh.write("omega,re,im,mag_db,phase_rad\n")
        for p in points:
            fh.write("%.12e,%.12e,%.12e,%.12e,%.12e\n"
                     % (p.omega, p.value.real, p.value.imag, p.magnitude_db, p.phase_rad))
    logger.info("wrote %d Bode rows to %s", len(points), path)
