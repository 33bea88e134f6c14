"""Beamforming strategy: who beams, toward which sector, and the handshake.

Nodes are classified by (stability, degree). Low-stability nodes have met
many different nodes and likely carry fresh information, so they beamform;
high- and zero-stability nodes are the ones worth beaming to. A node that
is isolated now and was isolated before may beam at anyone. The chosen
beamformer partitions the circle into sectors of width BW, weighs each
sector by the total stability of the high-stability targets inside it,
and steers at the best one -- excluding targets that are already one-hop
neighbors, since beaming at those cannot shorten any path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import antenna
from .antenna import AntennaConfig, Beam, sector_count, sector_geometry, wrap_angle


class StabilityClass(Enum):
    ZERO = "zero"
    LOW = "low"
    MID = "mid"
    HIGH = "high"


class DegreeClass(Enum):
    ZERO = "zero"
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class PolicyConfig:
    s_min: float
    s_max: float
    degree_threshold: float
    max_elements: int
    r: float
    antenna_kind: str  # "ula" | "sector"
    antenna: AntennaConfig

    def __post_init__(self):
        if not 0.0 < self.s_min <= self.s_max <= 1.0:
            raise ValueError("need 0 < s_min <= s_max <= 1")
        if self.antenna_kind not in ("ula", "sector"):
            raise ValueError(f"unknown antenna kind {self.antenna_kind!r}")
        if self.r <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class BeamDecision:
    node_id: int
    action: str  # "stay_omni" | "beamform"
    m: int = 1
    boresight: float = 0.0
    target_count: int = 0


@dataclass(frozen=True, eq=False)
class CandidateInfo:
    """What a sweeping node can learn about another node via probe/reply."""

    node_id: int
    position: np.ndarray
    stability: float
    degree: int
    hop1: bool  # already a one-hop omni neighbor of the sweeping node


def classify(s: float, degree: int, cfg: PolicyConfig):
    """Map a stability value and a degree to their strategy classes."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"stability must lie in [0, 1], got {s}")
    if s == 0.0:
        sc = StabilityClass.ZERO
    elif s < cfg.s_min:
        sc = StabilityClass.LOW
    elif s >= cfg.s_max:
        sc = StabilityClass.HIGH
    else:
        sc = StabilityClass.MID
    if degree == 0:
        dc = DegreeClass.ZERO
    elif degree >= cfg.degree_threshold:
        dc = DegreeClass.HIGH
    else:
        dc = DegreeClass.LOW
    return sc, dc


def is_beamformer(sc: StabilityClass, dc: DegreeClass) -> bool:
    """Beamform when stability is low, or when fully isolated (zero/zero)."""
    if sc is StabilityClass.LOW:
        return True
    return sc is StabilityClass.ZERO and dc is DegreeClass.ZERO


def is_target(sc: StabilityClass, dc: DegreeClass, beamformer_class) -> bool:
    """A fully isolated beamformer may target anyone; a low-stability one
    targets high- or zero-stability nodes (any degree)."""
    bf_sc, bf_dc = beamformer_class
    if bf_sc is StabilityClass.ZERO and bf_dc is DegreeClass.ZERO:
        return True
    return sc in (StabilityClass.HIGH, StabilityClass.ZERO)


def _coverage_matrix(dist, offset, m, r, cfg: PolicyConfig):
    """Boolean (sectors, candidates) coverage for a beam steered at each
    sector center."""
    n_sec = sector_count(m)
    _, bw = sector_geometry(m, r)
    boresights = (np.arange(n_sec) + 0.5) * bw
    if cfg.antenna_kind == "sector":
        # exact tiling: sector j is [j*bw, (j+1)*bw)
        bl = m * r
        idx = np.minimum((offset // bw).astype(int), n_sec - 1)
        cov = (idx[None, :] == np.arange(n_sec)[:, None]) & (dist[None, :] <= bl)
        return cov, boresights
    off = wrap_angle(offset[None, :] - boresights[:, None])
    knots, gains = antenna._gain_curve(m, cfg.antenna.spacing_wavelengths)
    g = np.interp(np.abs(off), knots, gains)
    limit = r * g ** (1.0 / cfg.antenna.path_loss_exponent)
    return dist[None, :] <= limit, boresights


def sweep(node: CandidateInfo, candidates, m: int, r: float,
          cfg: PolicyConfig) -> BeamDecision:
    """Pick the best sector for a beamforming node, or revert to omni.

    Sector weight is the summed stability of covered high-stability
    targets; ties (including the all-zero-weight case, where only
    zero-stability targets exist) fall back to the sector covering the
    most qualifying targets, then to the lowest sector index. One-hop
    neighbors never qualify. With no qualifying target in any sector the
    node stays omnidirectional.
    """
    node_class = classify(node.stability, node.degree, cfg)
    others = [c for c in candidates if c.node_id != node.node_id]
    if not others:
        return BeamDecision(node.node_id, "stay_omni")

    pos = np.array([c.position for c in others], dtype=float)
    stab = np.array([c.stability for c in others], dtype=float)
    qual = np.array([
        (not c.hop1) and is_target(*classify(c.stability, c.degree, cfg),
                                   beamformer_class=node_class)
        for c in others
    ], dtype=bool)
    high = np.array([
        classify(c.stability, c.degree, cfg)[0] is StabilityClass.HIGH
        for c in others
    ], dtype=bool)

    origin = np.asarray(node.position, dtype=float)
    delta = pos - origin
    dist = np.hypot(delta[:, 0], delta[:, 1])
    bearing = np.mod(np.arctan2(delta[:, 1], delta[:, 0]), 2.0 * math.pi)

    cov, boresights = _coverage_matrix(dist, bearing, m, r, cfg)
    qmask = cov & qual[None, :]
    counts = qmask.sum(axis=1)
    if counts.sum() == 0:
        return BeamDecision(node.node_id, "stay_omni")
    weights = (qmask & high[None, :]).astype(float) @ stab

    n_sec = len(boresights)
    best = int(np.lexsort((np.arange(n_sec), -counts, -weights))[0])
    return BeamDecision(node.node_id, "beamform", m=m,
                        boresight=float(boresights[best]),
                        target_count=int(counts[best]))


def decide_all(snapshot, predictions, rng: np.random.Generator,
               cfg: PolicyConfig):
    """Decide every node's beam for this step.

    Beamformers draw their element count m uniformly from [2, M] and sweep;
    everyone else stays omnidirectional. Candidate information (position,
    stability, degree) for nodes inside beam coverage is resolved by the
    simulator acting as the probe/reply channel. Deterministic given rng.
    """
    adj = snapshot.adj
    pos = snapshot.positions
    n = adj.shape[0]
    degrees = adj.sum(axis=0)  # in-degree; omni snapshots are symmetric
    decisions = []
    for i in range(n):
        s = float(predictions[i])
        sc, dc = classify(s, int(degrees[i]), cfg)
        if not is_beamformer(sc, dc):
            decisions.append(BeamDecision(i, "stay_omni"))
            continue
        m = int(rng.integers(2, cfg.max_elements + 1))
        node = CandidateInfo(i, pos[i], s, int(degrees[i]), hop1=False)
        candidates = [
            CandidateInfo(j, pos[j], float(predictions[j]), int(degrees[j]),
                          hop1=bool(adj[i, j]))
            for j in range(n) if j != i
        ]
        decisions.append(sweep(node, candidates, m, cfg.r, cfg))
    return decisions


def beam_for_decision(decision: BeamDecision, position,
                      cfg: PolicyConfig) -> Beam:
    """Materialize the beam a decision implies at the node's position."""
    origin = (float(position[0]), float(position[1]))
    if decision.action == "stay_omni":
        return Beam("omni", origin, m=1, base_radius=cfg.r)
    if cfg.antenna_kind == "sector":
        _, bw = sector_geometry(decision.m, cfg.r)
        return Beam("sector", origin, boresight=decision.boresight,
                    m=decision.m, base_radius=cfg.r, width=bw)
    return Beam("ula", origin, boresight=decision.boresight,
                m=decision.m, base_radius=cfg.r)


def handshake(decisions, positions, cfg: PolicyConfig) -> set:
    """Directed links produced by beams for this step only.

    Every node covered by a beam gets the forward link plus a transient
    reverse link (it momentarily beams back so the beamformer learns the
    connection exists, then reverts to omni).
    """
    pos = np.asarray(positions, dtype=float)
    links = set()
    for d in decisions:
        if d.action != "beamform":
            continue
        beam = beam_for_decision(d, pos[d.node_id], cfg)
        for j in antenna.covered_indices(beam, pos, cfg.antenna):
            if j == d.node_id:
                continue
            links.add((d.node_id, int(j)))
            links.add((int(j), d.node_id))
    return links
