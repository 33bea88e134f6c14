"""Tests for SI packet spreading and the source/packet scenarios."""

import collections

import numpy as np
import pytest

from beamsim.dissemination import (
    BufferState,
    PacketId,
    ScenarioConfig,
    broadcast_step,
    coverage,
    generate,
    init_sources,
)


def chain_adj(n):
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        adj[i, i + 1] = True
    return adj


def sym(adj):
    return adj | adj.T


class TestScenarioConfig:
    def test_kind_defaults(self):
        assert ScenarioConfig.make("ss-sp").n_sources == 1
        assert ScenarioConfig.make("ms-sp").n_sources == 40
        assert ScenarioConfig.make("ss-up").packet_gen_horizon == 10
        assert ScenarioConfig.make("ms-mp").packet_gen_horizon == 30
        assert ScenarioConfig.make("MS-MP-JOIN").kind == "ms-mp-join"

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ScenarioConfig.make("broadcast-storm")

    def test_single_source_kinds_fix_n_sources(self):
        with pytest.raises(ValueError):
            ScenarioConfig("ss-sp", n_sources=3)

    def test_generation_end(self):
        assert ScenarioConfig.make("ms-sp").generation_end == 0
        assert ScenarioConfig.make("ss-mp").generation_end == 30


class TestInitSources:
    def test_single_source(self):
        plan = init_sources(np.random.default_rng(0),
                            ScenarioConfig.make("ss-sp"), range(50))
        assert len(plan.ids) == 1
        assert plan.join_times == (0,)

    def test_forty_sources_distinct(self):
        plan = init_sources(np.random.default_rng(1),
                            ScenarioConfig.make("ms-sp"), range(250))
        assert len(plan.ids) == 40
        assert len(set(plan.ids)) == 40

    def test_join_schedule_bounded(self):
        plan = init_sources(np.random.default_rng(2),
                            ScenarioConfig.make("ms-mp-join"), range(250))
        assert all(0 <= j <= 20 for j in plan.join_times)
        # no source emits before its join time
        scen = ScenarioConfig.make("ms-mp-join", gen_prob=1.0)
        for t in range(21):
            emitted = {n for n, _ in generate(t, plan, scen,
                                              np.random.default_rng(3))}
            late = {s for s, j in zip(plan.ids, plan.join_times) if j > t}
            assert emitted.isdisjoint(late)

    def test_rejects_more_sources_than_nodes(self):
        with pytest.raises(ValueError):
            init_sources(np.random.default_rng(0),
                         ScenarioConfig.make("ms-sp"), range(10))


class TestGenerate:
    def test_single_packet_kinds_emit_only_at_zero(self):
        plan = init_sources(np.random.default_rng(4),
                            ScenarioConfig.make("ms-sp"), range(100))
        scen = ScenarioConfig.make("ms-sp")
        rng = np.random.default_rng(5)
        assert len(generate(0, plan, scen, rng)) == 40
        assert generate(1, plan, scen, rng) == []

    def test_update_kind_stops_after_horizon(self):
        scen = ScenarioConfig.make("ss-up", gen_prob=1.0)
        plan = init_sources(np.random.default_rng(6), scen, range(20))
        rng = np.random.default_rng(7)
        assert generate(0, plan, scen, rng)[0][1].version == 0
        for t in range(1, 11):
            out = generate(t, plan, scen, rng)
            assert len(out) == 1 and out[0][1].version == t
        for t in range(11, 40):
            assert generate(t, plan, scen, rng) == []

    def test_multi_packet_expected_count(self):
        # binomial expectation: about horizon * gen_prob packets per source
        scen = ScenarioConfig.make("ms-mp")  # horizon 30, prob 0.5
        plan = init_sources(np.random.default_rng(8), scen, range(200))
        totals = collections.Counter()
        n_rounds = 40
        for k in range(n_rounds):
            rng = np.random.default_rng(100 + k)
            for t in range(31):
                for node, _ in generate(t, plan, scen, rng):
                    totals[node] += 1
        per_source = np.array([totals[s] / n_rounds for s in plan.ids])
        expected = 31 * 0.5
        se = np.sqrt(31 * 0.25 / n_rounds)
        assert abs(per_source.mean() - expected) < 3 * se

    def test_sequence_numbers_unique_per_source(self):
        scen = ScenarioConfig.make("ss-mp", gen_prob=1.0)
        plan = init_sources(np.random.default_rng(9), scen, range(10))
        rng = np.random.default_rng(10)
        seen = set()
        for t in range(31):
            for node, pkt in generate(t, plan, scen, rng):
                assert pkt not in seen
                seen.add(pkt)
        assert len(seen) == 31


class TestBroadcast:
    def test_chain_propagates_one_hop_per_step(self):
        adj = chain_adj(3)
        bufs = BufferState(3)
        pkt = PacketId(0, 0)
        bufs.deposit(0, pkt)
        one = broadcast_step(adj, bufs)
        assert pkt in one.held(1) and pkt not in one.held(2)
        two = broadcast_step(adj, one)
        assert pkt in two.held(2)

    def test_empty_link_set_changes_nothing(self):
        bufs = BufferState(4)
        bufs.deposit(2, PacketId(2, 0))
        out = broadcast_step(np.zeros((4, 4), dtype=bool), bufs)
        assert all(out.held(i) == bufs.held(i) for i in range(4))

    def test_broadcast_is_pure(self):
        adj = sym(chain_adj(3))
        bufs = BufferState(3)
        bufs.deposit(0, PacketId(0, 0))
        before = [bufs.held(i) for i in range(3)]
        broadcast_step(adj, bufs)
        assert [bufs.held(i) for i in range(3)] == before

    def test_version_monotonicity_in_update_mode(self):
        adj = np.zeros((2, 2), dtype=bool)
        adj[1, 0] = True  # node 1 sends to node 0
        bufs = BufferState(2, update_mode=True)
        bufs.deposit(0, PacketId(0, 0, version=3))
        bufs.deposit(1, PacketId(0, 0, version=2))
        out = broadcast_step(adj, bufs)
        assert out.versions[0] == 3  # v2 arriving never downgrades v3

    def test_held_sets_only_grow(self):
        rng = np.random.default_rng(11)
        n = 12
        bufs = BufferState(n)
        for s in range(3):
            bufs.deposit(s, PacketId(s, 0))
        prev = [bufs.held(i) for i in range(n)]
        for _ in range(10):
            upper = np.triu(rng.random((n, n)) < 0.15, k=1)
            bufs = broadcast_step(upper | upper.T, bufs)
            cur = [bufs.held(i) for i in range(n)]
            assert all(p <= c for p, c in zip(prev, cur))
            prev = cur

    def test_rejects_duplicate_deposit(self):
        bufs = BufferState(2)
        bufs.deposit(0, PacketId(0, 0))
        with pytest.raises(ValueError):
            bufs.deposit(1, PacketId(0, 0))


class TestCoverage:
    def test_complete_buffers(self):
        bufs = BufferState(3)
        pkt = PacketId(0, 0)
        bufs.deposit(0, pkt)
        full = broadcast_step(np.ones((3, 3), dtype=bool)
                              & ~np.eye(3, dtype=bool), bufs)
        assert coverage(full) == 1.0

    def test_zero_before_any_emission(self):
        assert coverage(BufferState(5)) == 0.0
        assert coverage(BufferState(5, update_mode=True)) == 0.0

    def test_half_coverage(self):
        bufs = BufferState(4)
        pkt = PacketId(0, 0)
        bufs.deposit(0, pkt)
        adj = np.zeros((4, 4), dtype=bool)
        adj[0, 1] = True
        out = broadcast_step(adj, bufs)
        assert coverage(out) == pytest.approx(0.5)

    def test_explicit_ground_truth_subset(self):
        bufs = BufferState(2)
        p0, p1 = PacketId(0, 0), PacketId(1, 0)
        bufs.deposit(0, p0)
        bufs.deposit(0, p1)
        assert coverage(bufs) == pytest.approx(0.5)
        assert coverage(bufs, {p0}) == pytest.approx(0.5)

    def test_update_mode_counts_latest_only(self):
        bufs = BufferState(4, update_mode=True)
        bufs.deposit(0, PacketId(0, 0, version=1))
        out = broadcast_step(np.ones((4, 4), dtype=bool)
                             & ~np.eye(4, dtype=bool), bufs)
        assert coverage(out) == 1.0
        out.deposit(0, PacketId(0, 0, version=2))  # fresh version at source
        assert coverage(out) == pytest.approx(0.25)


class TestBfsEquivalence:
    def test_si_equals_bfs_layering(self):
        # cumulative held sets after k rounds = BFS ball of radius k
        rng = np.random.default_rng(12)
        for _ in range(10):
            n = 25
            upper = np.triu(rng.random((n, n)) < 0.1, k=1)
            adj = upper | upper.T
            src = int(rng.integers(0, n))
            bufs = BufferState(n)
            pkt = PacketId(src, 0)
            bufs.deposit(src, pkt)
            dist = _bfs_distances(adj, src)
            for k in range(1, 8):
                bufs = broadcast_step(adj, bufs)
                holders = {i for i in range(n) if pkt in bufs.held(i)}
                assert holders == {i for i in range(n) if dist[i] <= k}

    def test_connected_graph_covered_within_diameter(self):
        n = 20
        adj = sym(chain_adj(n))  # path graph, diameter n-1
        bufs = BufferState(n)
        bufs.deposit(0, PacketId(0, 0))
        for _ in range(n - 1):
            bufs = broadcast_step(adj, bufs)
        assert coverage(bufs) == 1.0


def _bfs_distances(adj, src):
    n = adj.shape[0]
    dist = np.full(n, np.inf)
    dist[src] = 0
    frontier = [src]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in np.nonzero(adj[u])[0]:
                if dist[v] == np.inf:
                    dist[v] = d
                    nxt.append(int(v))
        frontier = nxt
    return dist
