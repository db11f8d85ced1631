"""Degree-preserving 1k null-model rewiring that steers triangle density.

One accepted rewire finds a chain D-B-A-C-E (B, C non-adjacent neighbors
of A; D and E neighbors of B and C respectively, outside A's neighborhood
and non-adjacent to each other), breaks [B,D] and [C,E], and adds [B,C]
and [D,E]. Node count, edge count, and the full degree sequence are
invariant. A candidate chain is accepted only when the move strictly
raises the triangle count (the new triangle [A,B,C] always appears, but
removed edges may have carried triangles of their own, so the net gain is
checked explicitly).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexes import Graph, SimplicialComplex

__all__ = [
    "SaturationError",
    "RewireLog",
    "rewire_add_triangle",
    "rewire_remove_triangle",
    "relative_density",
    "rewire_to_target",
    "triangle_count",
]


class SaturationError(RuntimeError):
    """No valid rewiring chain found within the attempt budget.

    Carries whatever was achieved before saturation: ``graph``, ``log``,
    and (for targeted runs) ``achieved_rho2``.
    """

    def __init__(self, message, graph=None, log=None, achieved_rho2=None):
        super().__init__(message)
        self.graph = graph
        self.log = log
        self.achieved_rho2 = achieved_rho2


@dataclass
class RewireLog:
    """Accepted chains as (A, B, C, D, E) tuples plus the attempt counter."""

    accepted: list[tuple[int, int, int, int, int]] = field(default_factory=list)
    attempts: int = 0


def triangle_count(adj: list[set[int]]) -> int:
    total = 0
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            if v > u:
                total += sum(1 for w in adj[u] & adj[v] if w > v)
    return total


def _adjacency_sets(g: Graph) -> list[set[int]]:
    adj = [set() for _ in range(g.n)]
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def _graph_from_sets(g: Graph, adj: list[set[int]]) -> Graph:
    edges = tuple(sorted((u, v) for u in range(g.n) for v in adj[u] if u < v))
    return Graph(g.n, edges, g.features, g.labels)


def _choice(rng: np.random.Generator, candidates):
    return candidates[int(rng.integers(len(candidates)))]


def _try_add_chain(adj, rng) -> tuple[int, int, int, int, int] | None:
    """One staged uniform draw of a valid chain; None if any stage is empty."""
    eligible = [v for v, nbrs in enumerate(adj) if len(nbrs) >= 2]
    if not eligible:
        return None
    a = _choice(rng, eligible)
    neighbors = sorted(adj[a])
    b = _choice(rng, neighbors)
    c_candidates = [c for c in neighbors if c != b and c not in adj[b]]
    if not c_candidates:
        return None
    c = _choice(rng, c_candidates)
    d_candidates = [d for d in sorted(adj[b]) if d != a and d not in adj[a]]
    if not d_candidates:
        return None
    d = _choice(rng, d_candidates)
    e_candidates = [
        e
        for e in sorted(adj[c])
        if e != a and e != d and e not in adj[a] and e not in adj[d]
    ]
    if not e_candidates:
        return None
    e = _choice(rng, e_candidates)
    return a, b, c, d, e


def _apply_chain(adj, chain) -> None:
    a, b, c, d, e = chain
    adj[b].discard(d), adj[d].discard(b)
    adj[c].discard(e), adj[e].discard(c)
    adj[b].add(c), adj[c].add(b)
    adj[d].add(e), adj[e].add(d)


def _triangle_gain(adj, chain) -> int:
    """Net triangle change of applying the chain to ``adj``.

    The two removed and two added edges are node-disjoint pairs, so no
    triangle contains two of them and local common-neighbor counts add up.
    """
    _, b, c, d, e = chain
    destroyed = len(adj[b] & adj[d]) + len(adj[c] & adj[e])
    _apply_chain(adj, chain)
    created = len(adj[b] & adj[c]) + len(adj[d] & adj[e])
    return created - destroyed


def _rewire_once(adj, rng, budget) -> tuple[tuple[int, int, int, int, int], int]:
    """Mutates adj in place; returns (chain, attempts used) or raises."""
    for attempt in range(1, budget + 1):
        chain = _try_add_chain(adj, rng)
        if chain is None:
            continue
        if _triangle_gain(adj, chain) > 0:
            return chain, attempt
        # revert: the move is an involution up to renaming
        a, b, c, d, e = chain
        _apply_chain(adj, (a, b, d, c, e))
    raise SaturationError(f"no valid rewiring chain in {budget} attempts")


def rewire_add_triangle(
    g: Graph, seed: int | np.random.Generator, max_attempts: int | None = None
) -> tuple[Graph, tuple[int, int, int, int, int]]:
    """Apply one triangle-creating rewire; raises SaturationError if none fits."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    budget = max_attempts if max_attempts is not None else 10 * max(g.n, 1)
    adj = _adjacency_sets(g)
    try:
        chain, _ = _rewire_once(adj, rng, budget)
    except SaturationError as exc:
        raise SaturationError(str(exc), graph=g) from None
    return _graph_from_sets(g, adj), chain


def rewire_remove_triangle(
    g: Graph, seed: int | np.random.Generator, max_attempts: int | None = None
) -> tuple[Graph, tuple[int, int, int, int, int]]:
    """Best-effort inverse move: break one triangle, degrees preserved.

    Reverses the relink: removes a triangle edge [B,C] (B, C neighbors of
    some A) and a disjoint edge [D,E], adds [B,D] and [C,E]. A candidate is
    kept only if the triangle count strictly drops; raises SaturationError
    when no such configuration is found.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    budget = max_attempts if max_attempts is not None else 10 * max(g.n, 1)
    adj = _adjacency_sets(g)
    before = triangle_count(adj)
    for _ in range(budget):
        a_candidates = [v for v, nbrs in enumerate(adj) if len(nbrs) >= 2]
        if not a_candidates:
            break
        a = _choice(rng, a_candidates)
        nbrs = sorted(adj[a])
        pairs = [(b, c) for b in nbrs for c in nbrs if b < c and c in adj[b]]
        if not pairs:
            continue
        b, c = _choice(rng, pairs)
        oriented = []
        for d in range(g.n):
            if d in (a, b, c):
                continue
            for e in sorted(adj[d]):
                if e in (a, b, c):
                    continue
                if d not in adj[b] and e not in adj[c] and d != e:
                    oriented.append((d, e))
        if not oriented:
            continue
        d, e = _choice(rng, oriented)
        trial = [set(s) for s in adj]
        trial[b].discard(c), trial[c].discard(b)
        trial[d].discard(e), trial[e].discard(d)
        trial[b].add(d), trial[d].add(b)
        trial[c].add(e), trial[e].add(c)
        if triangle_count(trial) < before:
            return _graph_from_sets(g, trial), (a, b, c, d, e)
    raise SaturationError(
        f"no triangle-removing chain in {budget} attempts", graph=g
    )


def relative_density(
    original: SimplicialComplex, modified: SimplicialComplex, p: int
) -> float:
    """rho_p: fractional change in the order-p simplex count."""
    base = original.count(p)
    if base < 1:
        raise ValueError(f"relative density undefined: original has no {p}-simplices")
    return modified.count(p) / base - 1.0


def rewire_to_target(
    g: Graph, target_rho2: float, seed: int
) -> tuple[Graph, RewireLog]:
    """Rewire until the triangle density gain reaches the target.

    Stops at the first accepted rewire meeting or exceeding ``target_rho2``
    (one-rewire overshoot possible). Saturation before the target raises,
    carrying the partial graph, log, and achieved density.
    """
    adj = _adjacency_sets(g)
    base = triangle_count(adj)
    if base < 1:
        raise ValueError("target density undefined: graph has no triangles")
    rng = np.random.default_rng(seed)
    log = RewireLog()
    rho = 0.0
    budget = 10 * max(g.n, 1)
    while rho < target_rho2:
        try:
            chain, used = _rewire_once(adj, rng, budget)
        except SaturationError:
            log.attempts += budget
            raise SaturationError(
                f"saturated at rho_2={rho:.4f} before target {target_rho2}",
                graph=_graph_from_sets(g, adj),
                log=log,
                achieved_rho2=rho,
            ) from None
        log.accepted.append(chain)
        log.attempts += used
        rho = triangle_count(adj) / base - 1.0
    return _graph_from_sets(g, adj), log
