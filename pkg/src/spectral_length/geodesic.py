"""Ground-truth geodesic distances for the implemented geometries."""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy.integrate import simpson


class DisconnectedGraphError(ValueError):
    pass


def _arc(sqrt_g, start: float, stop: float, panels: int) -> float:
    if stop == start:
        return 0.0
    x = np.linspace(start, stop, panels + 1)
    return float(simpson(sqrt_g(x), x=x))


def circle_geodesic(x: float, y: float, length: float, g, panels: int = 256) -> float:
    """Shorter of the two arcs between x and y, measured with ds = sqrt(g) dx.

    ``g`` is a callable (periodic with period ``length``) or a positive
    constant. Each arc is integrated with composite Simpson on ``panels``
    panels (rounded up to an even count, minimum 256).
    """
    if not (0 <= x < length and 0 <= y < length):
        raise ValueError(f"endpoints must lie in [0, {length}), got {x}, {y}")
    if x == y:
        return 0.0
    if callable(g):
        metric = g
    else:
        if not g > 0:
            raise ValueError(f"metric must be positive, got {g}")
        metric = lambda s: np.full_like(s, float(g))  # noqa: E731

    def sqrt_g(s):
        vals = np.asarray(metric(s), dtype=float)
        if np.any(vals <= 0):
            raise ValueError("metric must be strictly positive")
        return np.sqrt(vals)

    panels = max(256, panels + panels % 2)
    lo, hi = min(x, y), max(x, y)
    inner = _arc(sqrt_g, lo, hi, panels)
    outer = _arc(sqrt_g, hi, lo + length, panels)
    return min(inner, outer)


def torus_geodesic(p, q, lx: float, ly: float) -> float:
    """Flat-torus distance: minimum over winding offsets in {-1, 0, 1}^2."""
    dx = float(q[0]) - float(p[0])
    dy = float(q[1]) - float(p[1])
    return min(
        math.hypot(dx + kx * lx, dy + ky * ly)
        for kx in (-1, 0, 1)
        for ky in (-1, 0, 1)
    )


def _adjacency(edges, n: int | None):
    edges = [(int(i), int(j), float(w)) for i, j, w in edges]
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
    adj = [[] for _ in range(n)]
    for i, j, w in edges:
        if not w > 0:
            raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
        adj[i].append((j, w))
        adj[j].append((i, w))
    return adj


def shortest_path_lengths(edges, source: int, n: int | None = None) -> np.ndarray:
    """Dijkstra distances from ``source`` over undirected ``(i, j, length)`` edges.

    Unreachable nodes get ``inf``.
    """
    adj = _adjacency(edges, n)
    dist = np.full(len(adj), np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist[node]:
            continue
        for nbr, w in adj[node]:
            nd = d + w
            if nd < dist[nbr]:
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return dist


def graph_shortest_path(edges, p: int, q: int, n: int | None = None) -> float:
    if p == q:
        return 0.0
    # Always search from the smaller index so d(p, q) == d(q, p) bit for bit.
    p, q = min(p, q), max(p, q)
    dist = shortest_path_lengths(edges, p, n)
    if not np.isfinite(dist[q]):
        raise DisconnectedGraphError(f"no path between {p} and {q}")
    return float(dist[q])
