"""SI packet spreading over per-step directed graphs.

Nodes that hold a packet hold it forever and retransmit their whole buffer
along every outgoing link each step (susceptible-infected, no recovery,
no loss, no bandwidth cap). Six source/packet scenarios control who emits
what and when; coverage is the fraction of nodes holding everything
emitted so far -- or, in the update scenario, the latest version.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

SCENARIO_KINDS = ("ss-sp", "ss-up", "ss-mp", "ms-sp", "ms-mp", "ms-mp-join")

_SINGLE_SOURCE = ("ss-sp", "ss-up", "ss-mp")


@dataclass(frozen=True)
class PacketId:
    """Identity of one information unit."""

    source_id: int
    seq: int
    version: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "ss-sp"
    n_sources: int = 1
    packet_gen_horizon: int = 0
    source_join_horizon: int = 20
    gen_prob: float = 0.5

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind in _SINGLE_SOURCE and self.n_sources != 1:
            raise ValueError(f"{kind} is single-source")
        if self.n_sources < 1:
            raise ValueError("need at least one source")
        if not 0.0 <= self.gen_prob <= 1.0:
            raise ValueError("gen_prob must be a probability")

    @classmethod
    def make(cls, kind: str, n_sources: int | None = None,
             packet_gen_horizon: int | None = None,
             source_join_horizon: int = 20, gen_prob: float = 0.5):
        """Scenario with per-kind defaults: 40 sources for multi-source
        kinds, generation horizon 10 for the update scenario and 30 for
        the multi-packet ones."""
        kind = kind.lower()
        if n_sources is None:
            n_sources = 1 if kind in _SINGLE_SOURCE else 40
        if packet_gen_horizon is None:
            if kind in ("ss-sp", "ms-sp"):
                packet_gen_horizon = 0
            elif kind == "ss-up":
                packet_gen_horizon = 10
            else:
                packet_gen_horizon = 30
        return cls(kind, n_sources, packet_gen_horizon,
                   source_join_horizon, gen_prob)

    @property
    def update_mode(self) -> bool:
        return self.kind == "ss-up"

    @property
    def generation_end(self) -> int:
        """Last step at which a new packet can possibly appear."""
        if self.kind in ("ss-sp", "ms-sp"):
            return 0
        return self.packet_gen_horizon


@dataclass(frozen=True)
class SourcePlan:
    """Chosen source ids and, for the join scenario, when each activates."""

    ids: tuple
    join_times: tuple

    def active(self, t: int):
        return [s for s, j in zip(self.ids, self.join_times) if j <= t]


def init_sources(rng: np.random.Generator, scenario: ScenarioConfig,
                 node_ids) -> SourcePlan:
    """Uniformly choose distinct sources; join times only matter for the
    join scenario (everyone else starts at t = 0)."""
    ids = list(node_ids)
    if scenario.n_sources > len(ids):
        raise ValueError("more sources than nodes")
    chosen = rng.choice(len(ids), size=scenario.n_sources, replace=False)
    sources = tuple(ids[i] for i in chosen)
    if scenario.kind == "ms-mp-join":
        joins = tuple(int(j) for j in rng.integers(
            0, scenario.source_join_horizon + 1, size=scenario.n_sources))
    else:
        joins = (0,) * scenario.n_sources
    return SourcePlan(sources, joins)


def generate(t: int, plan: SourcePlan, scenario: ScenarioConfig,
             rng: np.random.Generator):
    """New (node, packet) emissions at step t.

    Single-packet kinds emit once at t = 0. The update kind emits version t
    with probability gen_prob per step through its horizon (version 0 is
    guaranteed at t = 0). Multi-packet kinds emit a new sequence number
    with probability gen_prob per active source per step through the
    horizon.
    """
    kind = scenario.kind
    out = []
    if kind in ("ss-sp", "ms-sp"):
        if t == 0:
            out = [(s, PacketId(s, 0)) for s in plan.ids]
        return out
    if kind == "ss-up":
        src = plan.ids[0]
        if t == 0:
            return [(src, PacketId(src, 0, version=0))]
        if t <= scenario.packet_gen_horizon and rng.random() < scenario.gen_prob:
            return [(src, PacketId(src, 0, version=t))]
        return []
    # multi-packet kinds
    if t > scenario.packet_gen_horizon:
        return []
    draws = rng.random(scenario.n_sources)
    active = set(plan.active(t))
    for s, u in zip(plan.ids, draws):
        if s in active and u < scenario.gen_prob:
            out.append((s, PacketId(s, seq=t)))
    return out


class BufferState:
    """Per-node packet holdings plus the ground truth of emissions.

    Cumulative scenarios store holdings as bitmasks over a packet registry
    (union along links is a single OR); the update scenario stores the
    highest version seen per node.
    """

    def __init__(self, n_nodes: int, update_mode: bool = False):
        self.n = n_nodes
        self.update_mode = update_mode
        self.registry: list[PacketId] = []
        self._index: dict[PacketId, int] = {}
        self.masks = [0] * n_nodes
        self.versions = np.full(n_nodes, -1, dtype=np.int64)
        self.latest_emitted = -1

    def deposit(self, node: int, packet: PacketId):
        """Record a fresh emission at its source."""
        if self.update_mode:
            self.latest_emitted = max(self.latest_emitted, packet.version)
            self.versions[node] = max(self.versions[node], packet.version)
            return
        if packet in self._index:
            raise ValueError(f"duplicate packet {packet}")
        idx = len(self.registry)
        self.registry.append(packet)
        self._index[packet] = idx
        self.masks[node] |= 1 << idx

    def held(self, node: int) -> frozenset:
        if self.update_mode:
            v = int(self.versions[node])
            if v < 0:
                return frozenset()
            return frozenset({PacketId(-1, 0, version=v)})
        mask = self.masks[node]
        return frozenset(p for i, p in enumerate(self.registry)
                         if mask >> i & 1)

    def ground_truth(self) -> frozenset:
        return frozenset(self.registry)

    def copy(self) -> "BufferState":
        out = BufferState(self.n, self.update_mode)
        out.registry = list(self.registry)
        out._index = dict(self._index)
        out.masks = list(self.masks)
        out.versions = self.versions.copy()
        out.latest_emitted = self.latest_emitted
        return out


def broadcast_step(adj: np.ndarray, buffers: BufferState) -> BufferState:
    """One synchronous SI round: every node sends its whole buffer along
    every outgoing link; receivers take the union (or, in update mode,
    the maximum version). Pure: returns a new state."""
    out = buffers.copy()
    senders, receivers = np.nonzero(adj)
    if buffers.update_mode:
        for u, v in zip(senders.tolist(), receivers.tolist()):
            if buffers.versions[u] > out.versions[v]:
                out.versions[v] = buffers.versions[u]
        return out
    masks = buffers.masks
    new = out.masks
    for u, v in zip(senders.tolist(), receivers.tolist()):
        new[v] |= masks[u]
    return out


def coverage(buffers: BufferState, ground_truth=None) -> float:
    """Fraction of nodes holding the complete emitted set (update mode:
    the latest emitted version). Zero while nothing has been emitted."""
    if buffers.update_mode:
        if buffers.latest_emitted < 0:
            return 0.0
        return float(np.mean(buffers.versions == buffers.latest_emitted))
    if ground_truth is None:
        want = (1 << len(buffers.registry)) - 1
    else:
        want = 0
        for p in ground_truth:
            want |= 1 << buffers._index[p]
    if want == 0:
        return 0.0
    return sum(1 for m in buffers.masks if m & want == want) / buffers.n
