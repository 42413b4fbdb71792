"""
Closed-form and brute-force references for the built-in programs.

These do not go through VertexProgram at all; they cross-check the oracle.
"""

import heapq
import math
from collections import deque

from .engine import OracleGraph
from ..algorithms.echo import digest_ids


def pagerank_power_iteration(graph: OracleGraph, steps: int = 10) -> dict[int, float]:
    """
    Ranks after `steps` supersteps: start at 1/|V|, then `steps - 1` updates
    r'(v) = 0.15/|V| + 0.85 * sum(r(u) / d(u)) over in-neighbors u.

    Dangling vertices send nothing, so their rank leaks out of the total.
    Edges to missing vertices are ignored.
    """
    n = graph.num_vertices
    if n == 0:
        return {}
    ranks = {v: 1.0 / n for v in graph.neighbors}
    for _ in range(steps - 1):
        incoming = {v: 0.0 for v in graph.neighbors}
        for v, nbrs in graph.neighbors.items():
            if not nbrs:
                continue
            share = ranks[v] / len(nbrs)
            for u in nbrs:
                if u in incoming:
                    incoming[u] += share
        ranks = {v: 0.15 / n + 0.85 * incoming[v] for v in graph.neighbors}
    return ranks


def connected_components(graph: OracleGraph) -> dict[int, int]:
    """Smallest vertex id of each vertex's component (union-find)."""
    parent = {v: v for v in graph.neighbors}

    def find(v: int) -> int:
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    for v, nbrs in graph.neighbors.items():
        for u in nbrs:
            if u not in parent:
                continue
            a, b = find(v), find(u)
            if a != b:
                if a < b:
                    parent[b] = a
                else:
                    parent[a] = b
    return {v: find(v) for v in graph.neighbors}


def shortest_paths(graph: OracleGraph, source: int, weighted: bool = False) -> dict[int, float]:
    """Dijkstra (weighted) or breadth-first search (unit weights) from `source`."""
    distances = {v: math.inf for v in graph.neighbors}
    if source not in distances:
        return distances
    distances[source] = 0.0

    if not weighted:
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for u in graph.neighbors[v]:
                if u in distances and distances[u] == math.inf:
                    distances[u] = distances[v] + 1.0
                    queue.append(u)
        return distances

    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > distances[v]:
            continue
        for u, w in zip(graph.neighbors[v], graph.weights[v]):
            if u in distances and d + w < distances[u]:
                distances[u] = d + w
                heapq.heappush(heap, (d + w, u))
    return distances


def echo_digests(graph: OracleGraph, rounds: int = 1) -> dict[int, int]:
    """Each vertex folds its sorted in-neighbor ids `rounds` times."""
    incoming: dict[int, list[int]] = {v: [] for v in graph.neighbors}
    for v, nbrs in graph.neighbors.items():
        for u in nbrs:
            if u in incoming:
                incoming[u].append(v)
    result = {}
    for v, senders in incoming.items():
        value = 0
        if senders:
            for _ in range(rounds):
                value = digest_ids(value, senders)
        result[v] = value
    return result
