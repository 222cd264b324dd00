"""Correlation graph, maximal cliques, and IV-based clique representatives."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import SchemaError
from .validation import as_frame

CLIQUE_LOSER = "clique-loser"
MULTI_CLIQUE_DOMINATED = "multi-clique-dominated"
LOW_IV = "low-IV"


def correlation_matrix(encoded):
    """Pearson correlation of WoE-encoded columns as a DataFrame."""
    frame = as_frame(encoded)
    if frame.shape[1] < 2:
        raise SchemaError("correlation needs at least two columns")
    X = frame.to_numpy(dtype=float)
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    constant = [name for name, n in zip(frame.columns, norms) if n == 0]
    if constant:
        raise SchemaError(f"constant columns have no correlation: {constant}")
    corr = (centered.T @ centered) / np.outer(norms, norms)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return pd.DataFrame(corr, index=frame.columns, columns=frame.columns)


@dataclass(frozen=True)
class CorrelationGraph:
    vertices: tuple
    edges: dict  # (u, v) with u < v -> correlation
    threshold: float = 0.5
    signed: bool = False

    def adjacency(self):
        adj = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self.edges

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "mode": "signed" if self.signed else "absolute",
            "vertices": list(self.vertices),
            "edges": [{"u": u, "v": v, "correlation": c} for (u, v), c in sorted(self.edges.items())],
        }

    def to_dot(self):
        lines = ["graph correlation {"]
        for v in self.vertices:
            lines.append(f'  "{v}";')
        for (u, v), c in sorted(self.edges.items()):
            lines.append(f'  "{u}" -- "{v}" [label="{c:.3f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(matrix, names=None, threshold=0.5, signed=False):
    """Edge between two features iff |corr| > threshold (corr > threshold if ``signed``)."""
    if isinstance(matrix, pd.DataFrame):
        names = list(matrix.columns) if names is None else list(names)
        matrix = matrix.to_numpy(dtype=float)
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SchemaError("correlation matrix must be square")
    names = [str(n) for n in (names if names is not None else range(m.shape[0]))]
    if len(names) != m.shape[0]:
        raise SchemaError("names do not match matrix size")
    edges = {}
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            c = float(m[a, b])
            strength = c if signed else abs(c)
            if strength > threshold:
                u, v = sorted((names[a], names[b]))
                edges[(u, v)] = c
    return CorrelationGraph(tuple(names), edges, threshold, signed)


def maximal_cliques(graph):
    """All maximal cliques, each sorted, in lexicographic order.

    Bron-Kerbosch with Tomita pivoting. Isolated vertices come out as
    singleton cliques.
    """
    if not graph.vertices:
        return []
    adj = graph.adjacency()
    found = []

    def expand(r, p, x):
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(sorted(p | x), key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(graph.vertices), set())
    return sorted(found)


@dataclass
class CliqueReport:
    cliques: list
    winners: dict  # name -> IV, in descending IV order
    discarded: dict  # name -> reason
    clique_winners: list = field(default_factory=list)  # per-clique argmax before pruning
    iv_floor: float = 0.1

    def to_dict(self):
        return {
            "iv_floor": self.iv_floor,
            "cliques": [list(c) for c in self.cliques],
            "clique_winners": list(self.clique_winners),
            "winners": [{"feature": f, "iv": iv} for f, iv in self.winners.items()],
            "discarded": [{"feature": f, "reason": r} for f, r in sorted(self.discarded.items())],
        }


def _rank_key(name, iv_scores):
    # higher IV first, then lexicographic name
    return (-iv_scores[name], name)


def select_representatives(cliques, iv_scores, iv_floor=0.1):
    """One IV winner per clique, pruned for multi-clique dominance and the IV floor.

    A clique's winner is its max-IV member (ties: smallest name). A winner that
    belongs to another clique whose winner ranks above it is dropped. The
    ranking is by IV then name, so tied winners never both survive in a shared
    clique. Surviving winners with IV below ``iv_floor`` are dropped.
    """
    cliques = [tuple(sorted(c)) for c in cliques]
    if not cliques:
        return CliqueReport([], {}, {}, [], iv_floor)
    members = sorted({v for c in cliques for v in c})
    missing = [v for v in members if v not in iv_scores]
    if missing:
        raise SchemaError(f"IV scores missing for: {missing}")
    iv_scores = {k: float(v) for k, v in iv_scores.items()}
    clique_winners = [min(c, key=lambda v: _rank_key(v, iv_scores)) for c in cliques]
    winner_set = set(clique_winners)

    discarded = {}
    for v in members:
        if v not in winner_set:
            discarded[v] = CLIQUE_LOSER
    for v in sorted(winner_set):
        for c, w in zip(cliques, clique_winners):
            if v in c and _rank_key(w, iv_scores) < _rank_key(v, iv_scores):
                discarded[v] = MULTI_CLIQUE_DOMINATED
                break
    survivors = [v for v in sorted(winner_set) if v not in discarded]
    for v in survivors:
        if iv_scores[v] < iv_floor:
            discarded[v] = LOW_IV
    final = sorted((v for v in survivors if v not in discarded), key=lambda v: _rank_key(v, iv_scores))
    winners = {v: iv_scores[v] for v in final}
    return CliqueReport(cliques, winners, dict(sorted(discarded.items())), clique_winners, iv_floor)
