"""Simulation loop: move, predict, decide, connect, disseminate, aggregate.

One run scatters ceil(rho * area) nodes, then repeats per step: advance
positions, predict each node's stability from its remembered neighbors,
apply the configured beamforming policy, build the directed link graph,
generate and broadcast packets, and re-record neighborhoods. Experiments
average many seeded runs into per-step coverage means with Student-t
confidence intervals; parameter sweeps reuse the same seeds across values
(common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import antenna, dissemination, mobility, policy
from .antenna import AntennaConfig
from .dissemination import BufferState, ScenarioConfig, SourcePlan
from .mobility import MobilityConfig
from .policy import BeamDecision, PolicyConfig
from .predictor import QuadratureConfig, connection_prob_table
from .stability import Snapshot

POLICIES = ("proposed", "none", "neighborhood", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of an experiment (defaults reproduce the
    baseline setup: 500 m x 500 m, rho 1e-3, r 30 m, M 6, alpha 1.6,
    beta 300 m, s_min 1e-6, s_max 0.7, 100 steps, 50 topologies, ULA)."""

    area_width: float = 500.0
    area_height: float = 500.0
    rho: float = 1e-3
    n_nodes: int | None = None  # explicit override of ceil(rho * area)
    r: float = 30.0
    m_max: int = 6
    alpha: float = 1.6
    beta: float = 300.0
    x_max: float | None = None  # default min(10 * beta, arena diagonal)
    s_min: float = 1e-6
    s_max: float = 0.7
    steps: int = 100
    n_topologies: int = 50
    scenario: ScenarioConfig = field(
        default_factory=lambda: ScenarioConfig.make("ss-sp"))
    policy: str = "proposed"
    antenna_kind: str = "ula"
    seed: int = 0
    frequency: float = 2.4e9
    element_spacing: float | None = None
    path_loss_exponent: float = 2.0
    degree_threshold: float | None = None  # default rho * pi * r^2
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    prob_table_size: int = 2048

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.antenna_kind not in ("ula", "sector"):
            raise ValueError(f"unknown antenna kind {self.antenna_kind!r}")
        if self.steps < 1:
            raise ValueError("need at least one step")
        if self.scenario.packet_gen_horizon > self.steps:
            raise ValueError("packet generation horizon exceeds run length")
        if self.scenario.kind == "ms-mp-join" and \
                self.scenario.source_join_horizon > self.steps:
            raise ValueError("source join horizon exceeds run length")

    @property
    def node_count(self) -> int:
        if self.n_nodes is not None:
            return self.n_nodes
        return math.ceil(self.rho * self.area_width * self.area_height)

    @property
    def effective_rho(self) -> float:
        return self.node_count / (self.area_width * self.area_height)

    def mobility_config(self) -> MobilityConfig:
        return MobilityConfig.from_arena(
            self.alpha, self.beta, self.area_width, self.area_height,
            x_max=self.x_max)

    def antenna_config(self) -> AntennaConfig:
        return AntennaConfig(self.m_max, self.frequency,
                             self.element_spacing, self.path_loss_exponent)

    def policy_config(self) -> PolicyConfig:
        thr = self.degree_threshold
        if thr is None:
            thr = self.effective_rho * math.pi * self.r * self.r
        return PolicyConfig(self.s_min, self.s_max, thr, self.m_max,
                            self.r, self.antenna_kind, self.antenna_config())


@dataclass(frozen=True)
class RunResult:
    coverage: np.ndarray  # length steps + 1, t = 0..steps
    beamformer_count: np.ndarray
    seed: int


@dataclass(frozen=True)
class Aggregate:
    t: np.ndarray
    mean_coverage: np.ndarray
    ci_half_width: np.ndarray  # 95%, Student-t
    n_runs: int

    @property
    def ci_low(self) -> np.ndarray:
        return self.mean_coverage - self.ci_half_width

    @property
    def ci_high(self) -> np.ndarray:
        return self.mean_coverage + self.ci_half_width


def unit_disk_adjacency(positions: np.ndarray, r: float) -> np.ndarray:
    """Symmetric boolean adjacency of all pairs within range r."""
    delta = positions[:, None, :] - positions[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", delta, delta)
    adj = d2 <= r * r
    np.fill_diagonal(adj, False)
    return adj


def build_graph(positions: np.ndarray, beams: dict, cfg: PolicyConfig) -> np.ndarray:
    """Directed link set for one step.

    Omni-omni pairs within r get symmetric links. A beamformer replaces
    its omni disk with the beam: it links to every covered node, and each
    covered node momentarily beams back (handshake), giving the reverse
    link for this step only.
    """
    n = len(positions)
    omni = np.array([beams[i].kind == "omni" for i in range(n)])
    adj = unit_disk_adjacency(positions, cfg.r)
    adj &= omni[:, None] & omni[None, :]
    for i in range(n):
        beam = beams[i]
        if beam.kind == "omni":
            continue
        covered = antenna.covered_indices(beam, positions, cfg.antenna)
        adj[i, covered] = True
        adj[covered, i] = True
    return adj


def _predict_all(prev_adj, prev_pos, new_pos, table) -> np.ndarray:
    """Vectorized stability prediction for every node from its records."""
    owners, neighbors = np.nonzero(prev_adj.T)  # rows: owner, in-neighbors
    n = len(new_pos)
    if len(owners) == 0:
        return np.zeros(n)
    offsets = prev_pos[neighbors] - new_pos[owners]
    l = np.hypot(offsets[:, 0], offsets[:, 1])
    probs = table(l)
    probs[l == 0.0] = 0.0
    sums = np.bincount(owners, weights=probs, minlength=n)
    counts = np.bincount(owners, minlength=n)
    return np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)


def _neighborhood_stabilities(prev_adj, disk) -> np.ndarray:
    """Post-move retained-neighborhood fractions (two-snapshot measure)."""
    old = prev_adj.sum(axis=1).astype(float)
    kept = np.logical_and(prev_adj, disk).sum(axis=1).astype(float)
    return np.divide(kept, old, out=np.zeros_like(old), where=old > 0)


def _random_baseline_decisions(n, proposed, snapshot, rng, cfg: PolicyConfig):
    """Same number of beamformers as the proposed policy this step, but
    chosen uniformly; each sweeps toward any covered node."""
    k = sum(1 for d in proposed if d.action == "beamform")
    decisions = {i: BeamDecision(i, "stay_omni") for i in range(n)}
    if k == 0:
        return [decisions[i] for i in range(n)]
    chosen = rng.choice(n, size=k, replace=False)
    pos = snapshot.positions
    for i in sorted(int(c) for c in chosen):
        m = int(rng.integers(2, cfg.max_elements + 1))
        others = [j for j in range(n) if j != i]
        cand_pos = pos[others]
        delta = cand_pos - pos[i]
        dist = np.hypot(delta[:, 0], delta[:, 1])
        bearing = np.mod(np.arctan2(delta[:, 1], delta[:, 0]), 2.0 * math.pi)
        cov, boresights = policy._coverage_matrix(dist, bearing, m, cfg.r, cfg)
        counts = cov.sum(axis=1)
        nonempty = np.nonzero(counts > 0)[0]
        if len(nonempty) == 0:
            continue
        j = int(nonempty[rng.integers(0, len(nonempty))])
        decisions[i] = BeamDecision(i, "beamform", m=m,
                                    boresight=float(boresights[j]),
                                    target_count=int(counts[j]))
    return [decisions[i] for i in range(n)]


def _neighborhood_decisions(s15, snapshot, rng, cfg: PolicyConfig):
    """The proposed policy with the two-snapshot retained-neighborhood
    stability substituted for the predicted one (classification, sweep
    and targeting all run on the realized post-move values)."""
    return policy.decide_all(snapshot, s15, rng, cfg)


def run_once(cfg: ExperimentConfig, seed: int, *,
             freeze_positions: bool = False,
             stop_when_complete: bool = False) -> RunResult:
    """One seeded simulation; bit-reproducible for a given (cfg, seed).

    freeze_positions is a test hook that disables movement. With
    stop_when_complete the loop ends once coverage hits 1 and no further
    packets can be generated (the tail of the series is then flat).
    """
    ss = np.random.SeedSequence(seed)
    rng_scatter, rng_mob, rng_scen, rng_policy, rng_random = (
        np.random.default_rng(s) for s in ss.spawn(5))

    mob = cfg.mobility_config()
    pcfg = cfg.policy_config()
    scen = cfg.scenario
    n = cfg.node_count
    steps = cfg.steps

    table = connection_prob_table(cfg.r, mob, cfg.quadrature,
                                  cfg.prob_table_size)

    pos = mobility.scatter(rng_scatter, n, mob)
    plan = dissemination.init_sources(rng_scen, scen, range(n))
    bufs = BufferState(n, update_mode=scen.update_mode)

    coverage = np.zeros(steps + 1)
    beam_counts = np.zeros(steps + 1, dtype=int)

    # t = 0: seed packets and record the initial neighborhoods; the first
    # broadcast happens inside step 1.
    disk = unit_disk_adjacency(pos, cfg.r)
    for node, pkt in dissemination.generate(0, plan, scen, rng_scen):
        bufs.deposit(node, pkt)
    coverage[0] = dissemination.coverage(bufs)

    prev_adj = disk
    prev_pos = pos.copy()

    for t in range(1, steps + 1):
        if not freeze_positions:
            pos = mobility.step(pos, rng_mob, mob)
        disk = unit_disk_adjacency(pos, cfg.r)
        snapshot = Snapshot(disk, pos, t)

        if cfg.policy == "none":
            decisions = [BeamDecision(i, "stay_omni") for i in range(n)]
        elif cfg.policy == "neighborhood":
            s15 = _neighborhood_stabilities(prev_adj, disk)
            decisions = _neighborhood_decisions(s15, snapshot, rng_policy, pcfg)
        else:
            preds = _predict_all(prev_adj, prev_pos, pos, table)
            proposed = policy.decide_all(snapshot, preds, rng_policy, pcfg)
            if cfg.policy == "proposed":
                decisions = proposed
            else:  # random baseline, paired with the proposed count
                decisions = _random_baseline_decisions(
                    n, proposed, snapshot, rng_random, pcfg)

        beams = {d.node_id: policy.beam_for_decision(d, pos[d.node_id], pcfg)
                 for d in decisions}
        adj = build_graph(pos, beams, pcfg)

        for node, pkt in dissemination.generate(t, plan, scen, rng_scen):
            bufs.deposit(node, pkt)
        bufs = dissemination.broadcast_step(adj, bufs)
        coverage[t] = dissemination.coverage(bufs)
        beam_counts[t] = sum(1 for d in decisions if d.action == "beamform")

        prev_adj = disk
        prev_pos = pos.copy()

        if stop_when_complete and coverage[t] == 1.0 and t >= scen.generation_end:
            coverage[t + 1:] = 1.0
            break

    return RunResult(coverage, beam_counts, seed)


def _run_for_seed(args):
    cfg, seed, stop = args
    return run_once(cfg, seed, stop_when_complete=stop)


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   stop_when_complete: bool = False) -> Aggregate:
    """Average run_once over n_topologies seeded runs (seed + i) with a
    95% Student-t confidence interval per step."""
    if cfg.n_topologies < 2:
        raise ValueError("need at least 2 topologies for an interval")
    seeds = [cfg.seed + i for i in range(cfg.n_topologies)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                _run_for_seed, [(cfg, s, stop_when_complete) for s in seeds]))
    else:
        results = [run_once(cfg, s, stop_when_complete=stop_when_complete)
                   for s in seeds]
    series = np.vstack([r.coverage for r in results])
    mean = series.mean(axis=0)
    sd = series.std(axis=0, ddof=1)
    nr = len(results)
    tcrit = stats.t.ppf(0.975, nr - 1)
    return Aggregate(np.arange(cfg.steps + 1), mean,
                     tcrit * sd / math.sqrt(nr), nr)


_SWEEPABLE = ("rho", "alpha", "beta", "r", "M", "S_min", "S_max",
              "antenna_kind", "n_sources")


def apply_parameter(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """Return a config with one sweepable parameter replaced."""
    key = name.strip()
    low = key.lower()
    if low == "rho":
        return replace(cfg, rho=float(value), n_nodes=None)
    if low == "alpha":
        return replace(cfg, alpha=float(value))
    if low == "beta":
        return replace(cfg, beta=float(value))
    if low == "r":
        return replace(cfg, r=float(value))
    if low == "m":
        return replace(cfg, m_max=int(value))
    if low == "s_min":
        return replace(cfg, s_min=float(value))
    if low == "s_max":
        return replace(cfg, s_max=float(value))
    if low == "antenna_kind":
        return replace(cfg, antenna_kind=str(value))
    if low == "n_sources":
        return replace(cfg, scenario=replace(cfg.scenario,
                                             n_sources=int(value)))
    raise ValueError(f"unknown sweep parameter {name!r}; "
                     f"expected one of {_SWEEPABLE}")


def sweep_parameter(cfg: ExperimentConfig, name: str, values,
                    workers: int = 1,
                    stop_when_complete: bool = False) -> list[Aggregate]:
    """One Aggregate per value, all else fixed; seeds are shared across
    values so comparisons use common random numbers."""
    return [run_experiment(apply_parameter(cfg, name, v), workers,
                           stop_when_complete) for v in values]


def time_to_coverage(coverage: np.ndarray, level: float) -> int:
    """First step with coverage >= level; len(series) when never reached."""
    hits = np.nonzero(np.asarray(coverage) >= level)[0]
    return int(hits[0]) if len(hits) else len(coverage)


def format_aggregate(agg: Aggregate, cfg: ExperimentConfig,
                     timestamp: str | None = None) -> str:
    """Delimited text export with a metadata header echoing the config."""
    lines = ["# beamsim aggregate"]
    if timestamp is not None:
        lines.append(f"# generated: {timestamp}")
    lines.append(f"# seed: {cfg.seed}")
    lines.append(f"# n_runs: {agg.n_runs}")
    for key, val in sorted(_config_items(cfg)):
        lines.append(f"# config {key} = {val}")
    lines.append("t,mean_coverage,ci_low,ci_high,policy,scenario")
    for i in range(len(agg.t)):
        lines.append(
            f"{int(agg.t[i])},{agg.mean_coverage[i]:.6f},"
            f"{agg.ci_low[i]:.6f},{agg.ci_high[i]:.6f},"
            f"{cfg.policy},{cfg.scenario.kind}")
    return "\n".join(lines) + "\n"


def _config_items(cfg: ExperimentConfig):
    items = []
    for key in ("area_width", "area_height", "rho", "n_nodes", "r", "m_max",
                "alpha", "beta", "x_max", "s_min", "s_max", "steps",
                "n_topologies", "policy", "antenna_kind", "seed",
                "frequency", "element_spacing", "path_loss_exponent",
                "degree_threshold", "prob_table_size"):
        items.append((key, getattr(cfg, key)))
    items.append(("scenario", cfg.scenario.kind))
    items.append(("n_sources", cfg.scenario.n_sources))
    items.append(("packet_gen_horizon", cfg.scenario.packet_gen_horizon))
    items.append(("source_join_horizon", cfg.scenario.source_join_horizon))
    items.append(("gen_prob", cfg.scenario.gen_prob))
    return items
