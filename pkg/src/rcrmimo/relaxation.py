"""Convex relaxation sets V and their projection / distance functions.

Every set acts on one complex coordinate; vectors are handled entrywise
since V^n is a product set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, ConfigurationError, InputError

KINDS = ("disk", "box", "none")


@dataclass(frozen=True)
class RelaxationSet:
    """A disk of given radius, a square box of given half-width, or all of C."""

    kind: str
    radius: float = 1.0
    halfwidth: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ConfigurationError(f"relaxation {self.kind!r} not understood; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "disk" and not self.radius > 0:
            raise ConfigurationError("disk_radius must be positive")
        if kind == "box" and not self.halfwidth > 0:
            raise ConfigurationError("box_halfwidth must be positive")

    @classmethod
    def disk(cls, radius: float = 1.0) -> "RelaxationSet":
        return cls("disk", radius=float(radius))

    @classmethod
    def box(cls, halfwidth: float) -> "RelaxationSet":
        return cls("box", halfwidth=float(halfwidth))

    @classmethod
    def unconstrained(cls) -> "RelaxationSet":
        return cls("none")

    @classmethod
    def from_name(cls, name: str, constellation: Constellation | None = None,
                  disk_radius: float | None = None, box_halfwidth: float | None = None) -> "RelaxationSet":
        name = name.strip().lower()
        if name == "auto":
            if constellation is None:
                raise ConfigurationError("relaxation 'auto' needs a constellation")
            v = default_for(constellation)
            name = v.kind
        if name == "disk":
            return cls.disk(1.0 if disk_radius is None else disk_radius)
        if name == "box":
            if box_halfwidth is None:
                if constellation is None or constellation.kind != "qam":
                    raise ConfigurationError("box relaxation needs box_halfwidth or a QAM constellation")
                return default_for(constellation)
            return cls.box(box_halfwidth)
        if name == "none":
            return cls.unconstrained()
        raise ConfigurationError(f"relaxation {name!r} not understood; expected disk, box, none or auto")

    @property
    def name(self) -> str:
        return self.kind

    @property
    def preserves_phase(self) -> bool:
        return self.kind in ("disk", "none")

    @property
    def separable(self) -> bool:
        return self.kind in ("box", "none")

    def project(self, z):
        """Nearest point of V (entrywise for arrays)."""
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise InputError("projection requires finite inputs")
        if self.kind == "disk":
            mag = np.abs(z)
            outside = mag > self.radius
            scale = np.where(outside, self.radius / np.where(outside, mag, 1.0), 1.0)
            out = z * scale
            # rounding can leave |out| a few ulps above the radius; pull it inside
            # so that projecting again is exactly the identity
            for _ in range(4):
                over = np.abs(out) > self.radius
                if not np.any(over):
                    break
                out = np.where(over, out * (1.0 - 2.0 ** -52), out)
        elif self.kind == "box":
            c = self.halfwidth
            out = np.clip(z.real, -c, c) + 1j * np.clip(z.imag, -c, c)
        else:
            out = z.copy()
        return complex(out) if out.ndim == 0 else out

    def dist_sq(self, z):
        """Squared distance from ``z`` to V."""
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise InputError("distance requires finite inputs")
        if self.kind == "disk":
            out = np.maximum(np.abs(z) - self.radius, 0.0) ** 2
        elif self.kind == "box":
            c = self.halfwidth
            out = np.maximum(np.abs(z.real) - c, 0.0) ** 2 + np.maximum(np.abs(z.imag) - c, 0.0) ** 2
        else:
            out = np.zeros(z.shape)
        return float(out) if out.ndim == 0 else out

    def contains(self, z, tol: float = 1e-12):
        return self.dist_sq(z) <= tol * tol

    def check_covers(self, constellation: Constellation, tol: float = 1e-12) -> None:
        """Raise unless every constellation point lies in V."""
        if not np.all(self.dist_sq(constellation.points) <= tol):
            raise ConfigurationError(f"{self.kind} relaxation does not contain all points of {constellation.name}")


def default_for(c: Constellation) -> RelaxationSet:
    """Circular relaxation for PSK, box relaxation for QAM."""
    if c.kind == "psk":
        return RelaxationSet.disk(1.0)
    side = math.isqrt(c.M)
    return RelaxationSet.box((side - 1) / math.sqrt(c.E_avg))
