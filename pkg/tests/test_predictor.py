"""Tests for the link-persistence predictor."""

import dataclasses
import math

import numpy as np
import pytest

from beamsim.mobility import MobilityConfig, sample_jump
from beamsim.predictor import (
    ConnectionProbTable,
    NeighborRecord,
    PredictionInput,
    QuadratureConfig,
    connection_angle,
    connection_prob,
    connection_prob_given_jump,
    predict_node_stability,
)


def mob(alpha=1.6, beta=300.0):
    return MobilityConfig.from_arena(alpha, beta, 500.0, 500.0)


def mc_connection_prob(l, r, mobility, n, rng):
    """Monte-Carlo oracle: sample the neighbor jump and direction, count
    connections under the model's annulus convention (jumps outside
    [max(|l-r|,1), min(l+r, x_max)] count as disconnection)."""
    a = sample_jump(rng, mobility, size=n)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    d2 = l * l + a * a - 2.0 * l * a * np.cos(phi)
    lo = max(abs(l - r), 1.0)
    hi = min(l + r, mobility.x_max)
    hits = (d2 <= r * r) & (a >= lo) & (a <= hi)
    est = hits.mean()
    se = math.sqrt(max(est * (1 - est), 1e-12) / n)
    return est, se


class TestConnectionAngle:
    def test_right_triangle_case(self):
        assert connection_angle(3, 4, 5) == pytest.approx(math.pi / 2)

    def test_guaranteed_connection(self):
        assert connection_angle(1, 1, 2) == pytest.approx(math.pi)

    def test_unreachable_clamps_to_zero(self):
        assert connection_angle(1, 5, 2) == 0.0

    def test_degenerate_offset_rejected(self):
        with pytest.raises(ValueError):
            connection_angle(1, 0, 2)

    def test_scale_invariance_of_angle(self):
        # the angle depends only on ratios: doubling (a, l, r) is a no-op
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, l, r = rng.uniform(0.5, 50.0, size=3)
            assert connection_angle(2 * a, 2 * l, 2 * r) == pytest.approx(
                connection_angle(a, l, r), abs=1e-12)


class TestConnectionProbGivenJump:
    def test_values(self):
        assert connection_prob_given_jump(1, 1, 2) == pytest.approx(1.0)
        assert connection_prob_given_jump(3, 4, 5) == pytest.approx(0.5)
        assert connection_prob_given_jump(1, 5, 2) == 0.0


class TestConnectionProb:
    def test_zero_beyond_reachable_annulus(self):
        m = mob()
        assert connection_prob(m.x_max + 30.0 + 1.0, 30.0, m) == 0.0

    def test_degenerate_offset_rejected(self):
        with pytest.raises(ValueError):
            connection_prob(0.0, 30.0, mob())

    def test_matches_monte_carlo_oracle(self):
        m = mob()
        rng = np.random.default_rng(1)
        for l in (30.0, 60.0, 120.0):
            est, se = mc_connection_prob(l, 30.0, m, 200000, rng)
            assert abs(connection_prob(l, 30.0, m) - est) <= 3.0 * se

    def test_monotone_decreasing_from_30_to_120(self):
        m = mob()
        assert connection_prob(30.0, 30.0, m) >= connection_prob(120.0, 30.0, m)

    def test_bounded_on_grid(self):
        m = mob()
        for r in (10.0, 30.0, 50.0):
            for l in np.arange(1.0, 601.0, 40.0):
                p = connection_prob(float(l), r, m)
                assert 0.0 <= p <= 1.0


class TestPredictNodeStability:
    def test_mean_of_individual_probabilities(self):
        m = mob()
        own = np.array([100.0, 100.0])
        records = (
            NeighborRecord(1, np.array([110.0, 100.0])),
            NeighborRecord(2, np.array([100.0, 180.0])),
        )
        inp = PredictionInput(own, 5.0, records, 30.0, m)
        p1 = connection_prob(10.0, 30.0, m)
        p2 = connection_prob(80.0, 30.0, m)
        assert predict_node_stability(inp) == pytest.approx((p1 + p2) / 2)

    def test_no_records_gives_zero(self):
        inp = PredictionInput(np.zeros(2), 0.0, (), 30.0, mob())
        assert predict_node_stability(inp) == 0.0

    def test_all_neighbors_out_of_reach(self):
        m = mob()
        own = np.array([0.0, 0.0])
        far = m.x_max + 30.0 + 5.0
        records = (NeighborRecord(1, np.array([far, 0.0])),)
        inp = PredictionInput(own, 0.0, records, 30.0, m)
        assert predict_node_stability(inp) == 0.0

    def test_zero_offset_record_contributes_zero(self):
        m = mob()
        own = np.array([50.0, 50.0])
        records = (
            NeighborRecord(1, np.array([50.0, 50.0])),
            NeighborRecord(2, np.array([60.0, 50.0])),
        )
        inp = PredictionInput(own, 0.0, records, 30.0, m)
        expected = connection_prob(10.0, 30.0, m) / 2
        assert predict_node_stability(inp) == pytest.approx(expected)

    def test_permutation_invariant(self):
        m = mob()
        own = np.array([250.0, 250.0])
        recs = tuple(NeighborRecord(i, np.array([250.0 + 7.0 * i, 245.0]))
                     for i in range(1, 5))
        a = predict_node_stability(PredictionInput(own, 1.0, recs, 30.0, m))
        b = predict_node_stability(PredictionInput(own, 1.0, recs[::-1], 30.0, m))
        assert a == pytest.approx(b)

    def test_prediction_input_has_no_neighbor_new_positions(self):
        # structural contract: only time-t information is available
        names = {f.name for f in dataclasses.fields(PredictionInput)}
        assert names == {"own_new_position", "own_jump", "records", "r",
                         "mobility"}
        rec_names = {f.name for f in dataclasses.fields(NeighborRecord)}
        assert rec_names == {"neighbor_id", "last_position"}

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            PredictionInput(np.zeros(2), 0.0, (), 0.0, mob())


class TestQuadratureConfig:
    def test_defaults(self):
        q = QuadratureConfig()
        assert q.rel_tol == 1e-6 and q.abs_tol == 1e-9
        assert q.max_subdivisions == 200

    def test_rejects_bad_tolerances(self):
        with pytest.raises(ValueError):
            QuadratureConfig(rel_tol=0.0)


class TestConnectionProbTable:
    def test_interpolation_error_small(self):
        m = mob()
        table = ConnectionProbTable(30.0, m, n_points=2048)
        rng = np.random.default_rng(2)
        probes = rng.uniform(0.5, m.x_max + 30.0, size=60)
        for l in probes:
            assert abs(float(table(l)) - connection_prob(float(l), 30.0, m)) < 1e-3

    def test_zero_beyond_range_and_at_origin(self):
        m = mob()
        table = ConnectionProbTable(30.0, m, n_points=2048)
        assert float(table(m.x_max + 30.0 + 10.0)) == 0.0
        assert float(table(0.0)) == 0.0
