import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from d2dcov.analytic import ModelParams, retention_probability
from d2dcov.config import SimConfig
from d2dcov.exceptions import PreconditionError
from d2dcov.pairing import (
    CSV_COLUMNS,
    PairingResult,
    estimate_retention,
    pair_nodes,
    select_transmitters,
)
from d2dcov.pointprocess import PointPattern, RngStream


def _pattern(xy):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return PointPattern(xy, np.ones(len(xy)))


def brute_force_matching(xy, mu):
    """Lexicographically smallest sorted-distance vector over all maximal
    threshold matchings, found by exhaustive enumeration."""
    n = len(xy)
    edges = [
        (i, j, math.dist(xy[i], xy[j]))
        for i, j in itertools.combinations(range(n), 2)
        if math.dist(xy[i], xy[j]) <= mu
    ]
    matchings = []

    def extend(start, used, chosen):
        matchings.append(list(chosen))
        for e in range(start, len(edges)):
            i, j, _ = edges[e]
            if i not in used and j not in used:
                extend(e + 1, used | {i, j}, chosen + [edges[e]])

    extend(0, frozenset(), [])

    def maximal(m):
        used = {v for i, j, _ in m for v in (i, j)}
        return all(i in used or j in used for i, j, _ in edges)

    best = min((m for m in matchings if maximal(m)), key=lambda m: sorted(d for _, _, d in m))
    return {(i, j) for i, j, _ in best}


class TestPairNodes:
    def test_close_pair(self):
        res = pair_nodes(_pattern([[0, 0], [10, 0]]), 50)
        assert [(a, b) for a, b, _ in res.pairs] == [(0, 1)]
        assert res.pairs[0][2] == pytest.approx(10)
        assert res.unpaired == ()

    def test_beyond_threshold(self):
        res = pair_nodes(_pattern([[0, 0], [60, 0]]), 50)
        assert res.pairs == () and res.unpaired == (0, 1)

    def test_collinear_triple_takes_shortest_edge(self):
        xy = [[0, 0], [10, 0], [12, 0]]
        res = pair_nodes(_pattern(xy), 50)
        assert {(a, b) for a, b, _ in res.pairs} == brute_force_matching(xy, 50) == {(1, 2)}
        assert res.pairs[0][2] == pytest.approx(2)
        assert res.unpaired == (0,)

    def test_empty(self):
        res = pair_nodes(PointPattern.empty(), 50)
        assert res == PairingResult()

    def test_tie_broken_by_index(self):
        # node 1 is 5 m from both 0 and 2
        res = pair_nodes(_pattern([[0, 0], [5, 0], [10, 0]]), 50)
        assert [(a, b) for a, b, _ in res.pairs] == [(0, 1)]

    def test_negative_mu(self):
        with pytest.raises(PreconditionError):
            pair_nodes(_pattern([[0, 0]]), -1)

    def test_infinite_mu_pairs_everyone(self):
        res = pair_nodes(_pattern(np.random.default_rng(0).random((9, 2))), math.inf)
        assert len(res.pairs) == 4 and len(res.unpaired) == 1


coords = st.lists(
    st.tuples(st.floats(0, 100, allow_nan=False), st.floats(0, 100, allow_nan=False)),
    min_size=0, max_size=8,
)


@settings(max_examples=300, deadline=None)
@given(coords, st.floats(0, 150))
def test_greedy_equals_brute_force(xy, mu):
    dists = [math.dist(p, q) for p, q in itertools.combinations(xy, 2)]
    assume(len(set(np.round(dists, 9))) == len(dists))
    res = pair_nodes(_pattern(xy), mu)
    assert {(a, b) for a, b, _ in res.pairs} == (brute_force_matching(xy, mu) if xy else set())


@settings(max_examples=200, deadline=None)
@given(coords, st.floats(0, 150), st.floats(0, 150))
def test_matching_invariants_and_monotone(xy, mu1, mu2):
    lo, hi = sorted((mu1, mu2))
    small, big = pair_nodes(_pattern(xy), lo), pair_nodes(_pattern(xy), hi)
    for res, mu in ((small, lo), (big, hi)):
        members = [v for a, b, _ in res.pairs for v in (a, b)]
        assert len(members) == len(set(members))
        assert all(d <= mu for _, _, d in res.pairs)
        assert sorted(members + list(res.unpaired)) == list(range(len(xy)))
        assert len(res.transmitters) == len(res.pairs)
    assert len(small.paired) <= len(big.paired)


class TestSelectTransmitters:
    def test_no_pairs(self):
        assert select_transmitters(PairingResult(), RngStream(1)).transmitters == ()

    def test_one_per_pair_and_fair(self):
        n = 100_000
        pairs = tuple((2 * i, 2 * i + 1, 1.0) for i in range(n))
        res = select_transmitters(PairingResult(pairs=pairs), RngStream(3))
        assert len(res.transmitters) == n
        assert all(t in (a, b) for t, (a, b, _) in zip(res.transmitters, pairs))
        first = np.mean([t == a for t, (a, _, _) in zip(res.transmitters, pairs)])
        assert first == pytest.approx(0.5, abs=0.005)


def _config(lam, **kw):
    return SimConfig(model=ModelParams(lam=lam), **kw)


class TestEstimateRetention:
    MUS = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]

    def test_zero_distance_retains_nothing(self):
        for lam in (1.2e-5, 1e-4):
            curve = estimate_retention(_config(lam), [0.0], 200)
            assert curve.points[0].empirical_probability == 0.0

    def test_low_density_close_to_closed_form(self):
        curve = estimate_retention(_config(2.5e-5), [50.0], 3000)
        target = retention_probability(0.8, 2.5e-5, 50)
        assert target == pytest.approx(0.14536, abs=1e-5)
        assert abs(curve.points[0].empirical_probability - target) <= 0.03

    def test_high_density_mismatch(self):
        # Known red: greedy pairing stays within about 0.012 of the k = 0.8
        # curve at lambda = 1e-4 (0.455 vs 0.4665), so no mismatch appears.
        curve = estimate_retention(_config(1e-4), [50.0], 3000)
        target = retention_probability(0.8, 1e-4, 50)
        assert abs(curve.points[0].empirical_probability - target) > 0.03

    def test_nondecreasing_in_mu_and_lambda(self):
        curves = [estimate_retention(_config(lam), self.MUS, 1000) for lam in (1.2e-5, 2.5e-5, 5e-5)]
        for c in curves:
            assert np.all(np.diff(c.empirical) >= 0)
        for a, b in zip(curves, curves[1:]):
            assert np.all(b.empirical[1:] > a.empirical[1:])

    def test_undefined_without_candidates(self):
        curve = estimate_retention(_config(0.0), [10.0, 50.0], 20)
        assert all(not p.defined for p in curve.points)

    def test_rows_schema_and_ci(self):
        curve = estimate_retention(_config(2.5e-5), self.MUS, 500)
        rows = curve.rows()
        assert tuple(rows[0]) == CSV_COLUMNS
        for row in rows:
            assert 0 <= row["retention_empirical"] <= 1 and row["ci95"] >= 0
            assert row["retention_analytic"] == pytest.approx(retention_probability(0.8, 2.5e-5, row["mu_m"]))

    def test_workers_do_not_change_result(self):
        a = estimate_retention(_config(5e-5), self.MUS, 300, workers=1)
        b = estimate_retention(_config(5e-5), self.MUS, 300, workers=3)
        assert a == b

    def test_guard_ring_raises_in_cell_retention(self):
        plain = estimate_retention(_config(5e-5), [50.0], 1500)
        ring = estimate_retention(_config(5e-5, edge_mode="guard_ring"), [50.0], 1500)
        assert ring.empirical[0] > plain.empirical[0]

    def test_rejects_bad_input(self):
        with pytest.raises(PreconditionError):
            estimate_retention(_config(1e-5), [10.0], 0)
        with pytest.raises(PreconditionError):
            estimate_retention(_config(1e-5), [-1.0], 10)
