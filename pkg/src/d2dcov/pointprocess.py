"""Sampling primitives: homogeneous PPPs on annuli, the cellular user's
position, Rayleigh fading marks, and keyed random streams.

All positions are Cartesian with the base station at the origin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import CapacityError, PreconditionError

# int32 index space; a larger expected count is almost certainly a unit mistake.
MAX_EXPECTED_POINTS = 2**31 - 1


class Purpose(enum.IntEnum):
    """Substream identifiers, one per kind of randomness in a replication."""

    CANDIDATES = 0
    CELL_USER = 1
    FADING = 2
    PAIRING = 3
    GUARD_RING = 4


@dataclass(frozen=True)
class RngStream:
    """Address of an independent random stream.

    The generator is a Philox counter-based bit generator seeded from
    ``SeedSequence(master_seed, spawn_key=(stream_id, substream_id))``, so a
    stream depends only on its address and never on call order.
    """

    master_seed: int
    stream_id: int = 0
    substream_id: int = 0

    def __post_init__(self):
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise PreconditionError("master_seed must be an unsigned 64-bit integer")
        if self.stream_id < 0 or self.substream_id < 0:
            raise PreconditionError("stream ids must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_id, int(self.substream_id))
        )
        return np.random.Generator(np.random.Philox(seq))

    def for_replication(self, replication: int, purpose: int) -> "RngStream":
        """Stream for ``purpose`` in replication ``replication`` (offset by this stream's id)."""
        return replace(self, stream_id=self.stream_id + replication, substream_id=int(purpose))


@dataclass(frozen=True)
class Annulus:
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not (0.0 <= self.inner_radius < self.outer_radius):
            raise PreconditionError(
                f"annulus needs 0 <= R0 < R, got R0={self.inner_radius}, R={self.outer_radius}"
            )
        if not math.isfinite(self.outer_radius):
            raise PreconditionError("outer radius must be finite")

    @property
    def area(self) -> float:
        return math.pi * (self.outer_radius**2 - self.inner_radius**2)

    def contains(self, xy: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
        r = np.hypot(xy[..., 0], xy[..., 1])
        lo = self.inner_radius * (1 - rtol)
        hi = self.outer_radius * (1 + rtol)
        return (r >= lo) & (r <= hi)


@dataclass(frozen=True)
class PointPattern:
    """Marked point set: ``positions`` is (n, 2), ``fading`` is (n,)."""

    positions: np.ndarray
    fading: np.ndarray

    def __post_init__(self):
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise PreconditionError("positions must have shape (n, 2)")
        if len(self.positions) != len(self.fading):
            raise PreconditionError("positions and fading marks differ in length")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @classmethod
    def empty(cls) -> "PointPattern":
        return cls(np.empty((0, 2)), np.empty(0))

    @classmethod
    def concat(cls, *patterns: "PointPattern") -> "PointPattern":
        return cls(
            np.concatenate([p.positions for p in patterns]),
            np.concatenate([p.fading for p in patterns]),
        )


@dataclass(frozen=True)
class PolarPosition:
    r: float
    theta: float


def _uniform_radii(region: Annulus, u: np.ndarray) -> np.ndarray:
    r0, r1 = region.inner_radius, region.outer_radius
    return np.sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0))


def sample_fading(count: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Unit-mean exponential power gains (Rayleigh amplitude)."""
    if count < 0:
        raise PreconditionError("count must be non-negative")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return gen.exponential(1.0, size=count)


def sample_ppp(region: Annulus, density: float, rng: RngStream | np.random.Generator) -> PointPattern:
    """Homogeneous marked PPP on ``region``.

    Count ~ Poisson(density * area); radii by inverse CDF
    ``sqrt(R0^2 + u (R^2 - R0^2))``; angles uniform; marks unit-mean
    exponential. Draw order (count, radii, angles, marks) is fixed.
    """
    if not density >= 0.0:
        raise PreconditionError(f"density must be >= 0, got {density}")
    expected = density * region.area
    if not math.isfinite(expected) or expected > MAX_EXPECTED_POINTS:
        raise CapacityError(f"expected point count {expected:.3g} exceeds index capacity")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = int(gen.poisson(expected)) if expected > 0 else 0
    if n == 0:
        return PointPattern.empty()
    r = _uniform_radii(region, gen.random(n))
    theta = gen.random(n) * (2.0 * math.pi)
    fading = gen.exponential(1.0, size=n)
    positions = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    return PointPattern(positions, fading)


def sample_cell_user(region: Annulus, rng: RngStream | np.random.Generator) -> PolarPosition:
    """User position with radial pdf 2r/(R^2 - R0^2) and uniform angle."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    u, v = gen.random(2)
    r = float(_uniform_radii(region, np.asarray(u)))
    return PolarPosition(r=r, theta=float(v) * 2.0 * math.pi)
