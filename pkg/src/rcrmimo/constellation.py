"""Discrete transmit alphabets (M-PSK and square M-QAM)."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid scenario or constellation configuration."""


class InputError(ValueError):
    """Invalid numerical input (non-finite values, bad shapes, foreign symbols)."""


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit average power M-PSK or square M-QAM alphabet.

    Points are held in canonical order: PSK by increasing phase index,
    QAM row-major over (real level, imaginary level) increasing.
    """

    kind: str
    M: int
    points: np.ndarray = field(init=False, repr=False)
    E_avg: float = field(init=False)

    def __post_init__(self):
        kind = self.kind.lower()
        M = int(self.M)
        if kind == "psk":
            if M < 4 or not _is_power_of_two(M):
                raise ConfigurationError(f"PSK order must be a power of two >= 4, got {M}")
            ang = 2.0 * np.pi * np.arange(M) / M
            re, im = np.cos(ang), np.sin(ang)
            re[np.abs(re) < 1e-15] = 0.0
            im[np.abs(im) < 1e-15] = 0.0
            pts = re + 1j * im
            e_avg = 1.0
        elif kind == "qam":
            side = math.isqrt(M)
            if side * side != M or not _is_power_of_two(side) or side < 2:
                raise ConfigurationError(f"QAM order must be 2^(2k), got {M}")
            e_avg = 2.0 * (M - 1) / 3.0
            lv = np.arange(-(side - 1), side, 2, dtype=float)
            pts = (lv[:, None] + 1j * lv[None, :]).ravel() / math.sqrt(e_avg)
        else:
            raise ConfigurationError(f"unknown constellation kind {self.kind!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "E_avg", e_avg)

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        """Parse names such as ``"psk16"`` or ``"qam64"``."""
        m = re.fullmatch(r"(psk|qam)(\d+)", name.strip().lower())
        if m is None:
            raise ConfigurationError(
                f"constellation {name!r} not understood; expected pskM or qamM "
                "(e.g. psk4, psk8, psk16, qam16, qam64)"
            )
        return cls(m.group(1), int(m.group(2)))

    @property
    def name(self) -> str:
        return f"{self.kind}{self.M}"

    @property
    def pam_levels(self) -> np.ndarray:
        """Per-axis amplitude levels of a square QAM (normalized)."""
        if self.kind != "qam":
            raise AttributeError("pam_levels is only defined for QAM")
        side = math.isqrt(self.M)
        return np.arange(-(side - 1), side, 2, dtype=float) / math.sqrt(self.E_avg)

    def __eq__(self, other):
        return isinstance(other, Constellation) and (self.kind, self.M) == (other.kind, other.M)

    def __hash__(self):
        return hash((self.kind, self.M))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. symbols uniformly from the alphabet."""
        if n < 1:
            raise InputError("sample size must be >= 1")
        return self.points[rng.integers(0, self.M, size=n)]

    def decide_index(self, z) -> np.ndarray:
        """Index of the nearest point for every entry of ``z``.

        Distances equal up to rounding (relative 1e-12) count as ties, which
        go to the lowest canonical index.
        """
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise InputError("hard decision requires finite inputs")
        d = np.abs(z[..., None] - self.points)
        dmin = d.min(axis=-1, keepdims=True)
        return np.argmax(d <= dmin * (1 + 1e-12) + 1e-300, axis=-1)

    def hard_decide(self, z):
        """Nearest constellation point; works on scalars and arrays."""
        idx = self.decide_index(z)
        out = self.points[idx]
        return complex(out) if np.ndim(out) == 0 else out

    def index_of(self, x: complex) -> int:
        hit = np.flatnonzero(np.abs(self.points - x) <= 1e-12)
        if hit.size == 0:
            raise InputError(f"{x!r} is not a point of {self.name}")
        return int(hit[0])

    def in_decision_cell(self, z, x: complex):
        """True where ``z`` is strictly closer to ``x`` than to every other point.

        Points on a cell boundary belong to no cell.
        """
        i = self.index_of(x)
        z = np.asarray(z, dtype=complex)
        d = np.abs(z[..., None] - self.points)
        others = np.delete(d, i, axis=-1)
        res = np.all(d[..., i : i + 1] < others, axis=-1)
        return bool(res) if res.ndim == 0 else res
