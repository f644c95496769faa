"""Shortest-distance D2D pair selection and empirical retention curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import analytic
from ._parallel import map_replications
from .config import SimConfig
from .exceptions import PreconditionError
from .pointprocess import Annulus, PointPattern, Purpose, RngStream, sample_ppp


@dataclass(frozen=True)
class PairingResult:
    """Disjoint pairs ``(a, b, distance)`` with ``a < b``, in acceptance order.

    ``transmitters`` holds one member per pair; :func:`pair_nodes` fills it
    with the lower index and :func:`select_transmitters` redraws it.
    """

    pairs: tuple[tuple[int, int, float], ...] = ()
    unpaired: tuple[int, ...] = ()
    transmitters: tuple[int, ...] = ()

    @property
    def paired(self) -> tuple[int, ...]:
        return tuple(sorted(i for a, b, _ in self.pairs for i in (a, b)))

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, _, d in self.pairs], dtype=float)


def candidate_edges(positions: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All node pairs within ``mu``, sorted by (distance, a, b)."""
    n = len(positions)
    if n < 2 or mu < 0:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty, np.empty(0)
    if math.isfinite(mu):
        ij = cKDTree(positions).query_pairs(mu, output_type="ndarray")
        a, b = ij[:, 0], ij[:, 1]
    else:
        a, b = np.triu_indices(n, k=1)
    d = np.hypot(*(positions[a] - positions[b]).T)
    keep = d <= mu
    a, b, d = a[keep], b[keep], d[keep]
    order = np.lexsort((b, a, d))
    return a[order], b[order], d[order]


def greedy_matching(positions: np.ndarray, mu: float) -> list[tuple[int, int, float]]:
    """Accept edges in ascending distance while both endpoints are free.

    Because edges are scanned in sorted order, the matching at any
    ``mu' < mu`` is the prefix of this list with distance <= ``mu'``.
    """
    a, b, d = candidate_edges(positions, mu)
    taken = np.zeros(len(positions), dtype=bool)
    accepted = []
    for i, j, dist in zip(a.tolist(), b.tolist(), d.tolist()):
        if not (taken[i] or taken[j]):
            taken[i] = taken[j] = True
            accepted.append((i, j, dist))
    return accepted


def pair_nodes(pattern: PointPattern | np.ndarray, mu: float) -> PairingResult:
    """Greedy global shortest-distance matching with threshold ``mu``.

    Ties on distance are broken by lexicographic index order.
    """
    if not mu >= 0:
        raise PreconditionError(f"mu must be >= 0, got {mu}")
    positions = pattern.positions if isinstance(pattern, PointPattern) else np.asarray(pattern, float)
    pairs = greedy_matching(positions, mu)
    members = {i for a, b, _ in pairs for i in (a, b)}
    unpaired = tuple(i for i in range(len(positions)) if i not in members)
    return PairingResult(tuple(pairs), unpaired, tuple(a for a, _, _ in pairs))


def select_transmitters(pairing: PairingResult, rng: RngStream | np.random.Generator) -> PairingResult:
    """Fair coin per pair decides which member transmits."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if not pairing.pairs:
        return replace(pairing, transmitters=())
    coins = gen.random(len(pairing.pairs)) < 0.5
    tx = tuple(a if c else b for (a, b, _), c in zip(pairing.pairs, coins))
    return replace(pairing, transmitters=tx)


def draw_candidates(config: SimConfig, root: RngStream, replication: int) -> tuple[PointPattern, int]:
    """Candidate pattern for one replication.

    Returns the pattern and the number of leading points inside the
    simulation disk; with ``edge_mode="guard_ring"`` extra candidates from
    the ring ``[radius, radius + mu]`` follow them.
    """
    m = config.model
    inner = sample_ppp(
        Annulus(m.R0, config.region_radius), m.lam,
        root.for_replication(replication, Purpose.CANDIDATES),
    )
    if config.edge_mode == "guard_ring" and m.mu > 0:
        ring = sample_ppp(
            Annulus(config.region_radius, config.region_radius + m.mu), m.lam,
            root.for_replication(replication, Purpose.GUARD_RING),
        )
        return PointPattern.concat(inner, ring), len(inner)
    return inner, len(inner)


@dataclass(frozen=True)
class RetentionEstimate:
    mu: float
    empirical_probability: float
    replications: int
    half_width_95: float
    analytic_probability: float = math.nan

    @property
    def defined(self) -> bool:
        return not math.isnan(self.empirical_probability)


@dataclass(frozen=True)
class RetentionCurve:
    lam: float
    k: float
    points: tuple[RetentionEstimate, ...] = field(default_factory=tuple)

    @property
    def mu(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @property
    def empirical(self) -> np.ndarray:
        return np.array([p.empirical_probability for p in self.points])

    def rows(self) -> list[dict]:
        return [
            {
                "mu_m": p.mu,
                "retention_empirical": p.empirical_probability,
                "retention_analytic": p.analytic_probability,
                "ci95": p.half_width_95,
                "replications": p.replications,
            }
            for p in self.points
        ]


CSV_COLUMNS = ("mu_m", "retention_empirical", "retention_analytic", "ci95", "replications")


def _replication_paired_fractions(config: SimConfig, root: RngStream, mu_grid: np.ndarray, rep: int):
    pattern, n_inside = draw_candidates(config, root, rep)
    if n_inside == 0:
        return None
    pairs = greedy_matching(pattern.positions, float(mu_grid.max()))
    # distance at which each in-region node joins a pair (inf = never)
    join = np.full(len(pattern), np.inf)
    for a, b, d in pairs:
        join[a] = join[b] = d
    join = np.sort(join[:n_inside])
    return np.searchsorted(join, mu_grid, side="right") / n_inside


def estimate_retention(
    config: SimConfig,
    mu_grid: Sequence[float],
    replications: int,
    rng: RngStream | None = None,
    workers: int = 1,
) -> RetentionCurve:
    """Empirical probability that a candidate ends up paired, per ``mu``.

    Each replication contributes the fraction of its in-region candidates
    that are paired; the estimate is the mean over replications with at
    least one candidate, with a normal-approximation 95% half-width. A
    single greedy pass at ``max(mu_grid)`` serves the whole grid.
    """
    if replications < 1:
        raise PreconditionError("replications must be >= 1")
    mus = np.asarray(mu_grid, dtype=float)
    if mus.size == 0 or np.any(~(mus >= 0)):
        raise PreconditionError("mu values must be non-empty and >= 0")
    root = rng if rng is not None else RngStream(config.master_seed)
    per_rep = map_replications(
        _replication_paired_fractions, (config, root, mus), replications, workers
    )
    fractions = np.array([f for f in per_rep if f is not None]).reshape(-1, mus.size)
    used = len(fractions)
    m = config.model
    points = []
    for j, mu in enumerate(mus):
        analytic_p = analytic.retention_probability(m.k, m.lam, mu)
        if used == 0:
            points.append(RetentionEstimate(float(mu), math.nan, 0, math.nan, analytic_p))
            continue
        col = fractions[:, j]
        mean = float(col.mean())
        hw = 1.96 * float(col.std(ddof=1)) / math.sqrt(used) if used > 1 else math.inf
        points.append(RetentionEstimate(float(mu), mean, used, hw, analytic_p))
    return RetentionCurve(lam=m.lam, k=m.k, points=tuple(points))
