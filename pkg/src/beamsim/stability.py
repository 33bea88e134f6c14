"""Stability and entropy diagnostics for dynamic graph snapshots.

A toolbox of measures over consecutive snapshots of a changing network:
neighborhood similarity, adjacency-spectrum distance, two adjacency-based
stability scores, degree-rank overlap, Laplacian-spectrum graph entropy,
and a word-parsing entropy for binary link histories together with its
worst/best-case sequence analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lambertw

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """A timestamped directed graph over nodes 0..n-1.

    ``adj[i, j]`` is True when i transmits to j. Omnidirectional links are
    symmetric; beam links may be one-directional. The spectral measures
    below are meant for the symmetric (omni) snapshots.
    """

    adj: np.ndarray
    positions: np.ndarray | None = None
    t: int = 0

    def __post_init__(self):
        a = np.asarray(self.adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(np.diag(a)):
            raise ValueError("self-links are not allowed")
        object.__setattr__(self, "adj", a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def in_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=0)

    def neighbors(self, v: int) -> frozenset:
        return frozenset(np.nonzero(self.adj[v])[0].tolist())

    def in_neighbors(self, v: int) -> frozenset:
        return frozenset(np.nonzero(self.adj[:, v])[0].tolist())


def _check_same_nodes(g1: Snapshot, g2: Snapshot):
    if g1.n != g2.n:
        raise ValueError(f"snapshots cover different node sets ({g1.n} vs {g2.n})")


def cosine_similarity(g1: Snapshot, g2: Snapshot) -> float:
    """Sum over nodes of shared-neighbor counts, divided by |V|^2.

    This is the similarity form used for dynamic-graph comparison; note it
    is not the standard normalized cosine (no norm denominators).
    """
    _check_same_nodes(g1, g2)
    common = np.logical_and(g1.adj, g2.adj).sum()
    return float(common) / float(g1.n * g1.n)


def spectral_distance(g1: Snapshot, g2: Snapshot) -> float:
    """Distance between sorted adjacency spectra, normalized by the larger
    spectral energy. Zero when both graphs are edgeless."""
    _check_same_nodes(g1, g2)
    lam = np.linalg.eigvalsh(g1.adj.astype(float))
    mu = np.linalg.eigvalsh(g2.adj.astype(float))
    e1 = float(np.sum(lam * lam))
    e2 = float(np.sum(mu * mu))
    denom = max(e1, e2)
    if denom == 0.0:
        return 0.0
    return math.sqrt(float(np.sum((lam - mu) ** 2)) / denom)


def hanneke_stability(g1: Snapshot, g2: Snapshot) -> float:
    """Fraction of ordered node pairs whose link state is unchanged."""
    _check_same_nodes(g1, g2)
    n = g1.n
    if n < 2:
        raise ValueError("need at least 2 nodes")
    same = (g1.adj == g2.adj).sum() - n  # diagonal never counts
    return float(same) / float(n * (n - 1))


def tang_stability(snapshots) -> float:
    """Per-node temporal degree correlation averaged over nodes and steps.

    A node-time term where either snapshot has zero degree contributes 0
    (a vanished neighborhood retains no links).
    """
    snaps = list(snapshots)
    if len(snaps) < 2:
        raise ValueError("need at least 2 snapshots")
    n = snaps[0].n
    for s in snaps[1:]:
        _check_same_nodes(snaps[0], s)
    c = np.zeros(n)
    for a, b in zip(snaps[:-1], snaps[1:]):
        kept = np.logical_and(a.adj, b.adj).sum(axis=1).astype(float)
        deg_a = a.adj.sum(axis=1).astype(float)
        deg_b = b.adj.sum(axis=1).astype(float)
        denom = np.sqrt(deg_a * deg_b)
        term = np.divide(kept, denom, out=np.zeros(n), where=denom > 0)
        c += term
    c /= len(snaps) - 1
    return float(np.mean(c))


def rank_overlap(g1: Snapshot, g2: Snapshot, nu: int) -> float:
    """Overlap of the top-nu degree rankings, divided by |V|.

    The divisor is |V| (not nu), so full overlap with nu < |V| scores
    below 1. Degree ties are broken by ascending node id.
    """
    _check_same_nodes(g1, g2)
    if nu > g1.n:
        raise ValueError(f"nu = {nu} exceeds node count {g1.n}")
    ids = np.arange(g1.n)
    top1 = set(ids[np.lexsort((ids, -g1.degrees()))][:nu].tolist())
    top2 = set(ids[np.lexsort((ids, -g2.degrees()))][:nu].tolist())
    return len(top1 & top2) / g1.n


def _as_bits(h) -> tuple:
    if isinstance(h, str):
        bits = tuple(int(ch) for ch in h)
    else:
        bits = tuple(int(b) for b in h)
    if any(b not in (0, 1) for b in bits):
        raise ValueError("link history must be binary")
    return bits


def lz_word_count(h) -> int:
    """Number of unique words in the shortest-new-word parse of a bit string.

    Scanning left to right, each word is the shortest prefix of the
    remainder not yet in the dictionary; a final partial word (one that
    never became new before the string ended) counts once.
    """
    bits = _as_bits(h)
    n = len(bits)
    if n == 0:
        raise ValueError("empty link history")
    words = set()
    i = 0
    while i < n:
        j = i + 1
        while j <= n and bits[i:j] in words:
            j += 1
        if j > n:
            return len(words) + 1
        words.add(bits[i:j])
        i = j
    return len(words)


def link_entropy(h) -> float:
    """Word-parsing entropy of a link's on/off history: n*ln(n)/T."""
    bits = _as_bits(h)
    t = len(bits)
    if t < 3:
        raise ValueError(f"insufficient history: need T >= 3, got {t}")
    n = lz_word_count(bits)
    return n * math.log(n) / t


def worst_case_T(ell: int, z: int = 0) -> int:
    """Length of the hardest-to-parse sequence with max word length ell:
    2^(ell+1)*(ell-1) + 2 + Z."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if z < 0:
        raise ValueError("Z must be >= 0")
    return 2 ** (ell + 1) * (ell - 1) + 2 + z


def best_case_T(ell: int, z: int = 0) -> int:
    """Length of the easiest (constant) sequence with max word length ell:
    ell*(ell+1)/2 + Z, with 0 <= Z <= ell."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not 0 <= z <= ell:
        raise ValueError(f"Z must lie in [0, ell], got {z}")
    return ell * (ell + 1) // 2 + z


def worst_case_sequence(ell: int) -> str:
    """All binary words of lengths 1..ell concatenated in ascending order.

    Its shortest-new-word parse enumerates every word up to length ell,
    so the dictionary size is 2^(ell+1) - 2.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return "".join(
        format(i, f"0{k}b") for k in range(1, ell + 1) for i in range(2 ** k)
    )


def best_case_sequence(ell: int, z: int = 0) -> str:
    """Constant all-ones sequence of length best_case_T(ell, z)."""
    return "1" * best_case_T(ell, z)


def closed_form_ell(t: int, case: str) -> float:
    """Closed-form estimate of the maximal word length for a history of
    length T, for the worst- or best-case construction (Z = 0 branch).

    These are reported verbatim as approximations; they do not reproduce
    the exact integer inversions at small T, so word counts should always
    be taken from :func:`lz_word_count`.
    """
    if t < 3:
        raise ValueError(f"closed forms undefined for T < 3, got {t}")
    if case == "worst":
        y = (t / 2.0 - 1.0) * LN2
        return float((lambertw(y).real + LN2) / LN2)
    if case == "best":
        return 0.5 * (math.sqrt(8.0 * t) - 1.0)
    raise ValueError(f"case must be 'worst' or 'best', got {case!r}")


def closed_form_word_count(t: int) -> float:
    """Closed-form word-count estimate for the worst case (Z = 0 branch)."""
    if t < 3:
        raise ValueError(f"closed forms undefined for T < 3, got {t}")
    y = (t / 2.0 - 1.0) * LN2
    return float(2.0 ** ((lambertw(y).real + 2.0 * LN2) / LN2) - 2.0)


def _laplacian_eigenvalues(g: Snapshot) -> np.ndarray:
    a = g.adj.astype(float)
    lap = np.diag(a.sum(axis=1)) - a
    lam = np.linalg.eigvalsh(lap)
    return np.maximum(lam, 0.0)  # clip numeric noise below zero


def graph_entropy(g: Snapshot) -> float:
    """Laplacian-spectrum entropy: sum of (lam/2)*ln(lam/2), with 0*ln 0 = 0."""
    half = 0.5 * _laplacian_eigenvalues(g)
    nz = half[half > 0.0]
    return float(np.sum(nz * np.log(nz)))


def graph_entropy_quadratic(g: Snapshot) -> float:
    """Quadratic approximation of graph_entropy: sum of (lam/2)*(1 - lam/2)."""
    half = 0.5 * _laplacian_eigenvalues(g)
    return float(np.sum(half * (1.0 - half)))


def neighborhood_stability(n_old, n_new) -> float:
    """Fraction of the old in-neighborhood retained in the new one.

    Zero when the old neighborhood is empty (an isolated node has nothing
    to retain).
    """
    old = frozenset(n_old)
    if not old:
        return 0.0
    return len(old & frozenset(n_new)) / len(old)


@dataclass
class MetricReport:
    """Per-step stability measures over consecutive snapshot pairs."""

    rows: list = field(default_factory=list)

    COLUMNS = ("t", "cosine", "spectral", "hanneke", "tang",
               "rank_overlap", "graph_entropy")

    def to_delimited(self, sep: str = ",") -> str:
        lines = [sep.join(self.COLUMNS)]
        for row in self.rows:
            lines.append(sep.join([str(row[0])] + [f"{v:.6f}" for v in row[1:]]))
        return "\n".join(lines) + "\n"


def compute_metric_report(snapshots, top_fraction: float = 0.5) -> MetricReport:
    """Evaluate every measure on each consecutive snapshot pair.

    Rank overlap uses the top ``top_fraction`` of nodes; graph entropy is
    reported for the later snapshot of each pair.
    """
    snaps = list(snapshots)
    if len(snaps) < 2:
        raise ValueError("need at least 2 snapshots")
    nu = max(1, round(top_fraction * snaps[0].n))
    report = MetricReport()
    for a, b in zip(snaps[:-1], snaps[1:]):
        report.rows.append((
            b.t,
            cosine_similarity(a, b),
            spectral_distance(a, b),
            hanneke_stability(a, b),
            tang_stability([a, b]),
            rank_overlap(a, b, nu),
            graph_entropy(b),
        ))
    return report
