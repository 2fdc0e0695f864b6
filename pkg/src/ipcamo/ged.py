"""Exact graph edit distance between AIGs, with a wall-clock timeout."""
from __future__ import annotations

import heapq
import time
from collections import Counter

from .aig import AigGraph

EPS = -1  # deletion marker


def _edge_map(g: AigGraph) -> dict[tuple[int, int], bool]:
    return {(s, d): inv for s, d, inv in g.edges}


def _label_lower_bound(l1: Counter, l2: Counter) -> int:
    # min substitutions + |count difference| insert/deletes, labels only
    n1, n2 = sum(l1.values()), sum(l2.values())
    common = sum((l1 & l2).values())
    return max(n1, n2) - common


def graph_edit_distance(
    g1: AigGraph, g2: AigGraph, timeout: float = 10.0
) -> int | None:
    """Minimum number of unit-cost node/edge edits turning g1 into g2.

    Nodes are labeled by type, edges by their inversion flag; edges are
    directed. Returns None when the search exceeds the timeout.
    """
    deadline = time.monotonic() + timeout
    n1, n2 = g1.n, g2.n
    e1, e2 = _edge_map(g1), _edge_map(g2)
    lab1 = [t.value for t in g1.types]
    lab2 = [t.value for t in g2.types]

    def expand_cost(i: int, j: int, mapping: tuple[int, ...]) -> int:
        # cost of mapping g1 node i -> g2 node j (or EPS), given prior mapping
        cost = 0
        if j == EPS:
            cost += 1
            for k, jk in enumerate(mapping):
                if (k, i) in e1 or (i, k) in e1:
                    cost += 1
            return cost
        if lab1[i] != lab2[j]:
            cost += 1
        for k, jk in enumerate(mapping):
            for a, b in (((k, i), (jk, j)), ((i, k), (j, jk))):
                in1, in2 = a in e1, (jk != EPS) and b in e2
                if in1 and in2:
                    cost += int(e1[a] != e2[b])
                elif in1 != in2:
                    cost += 1
        return cost

    def remainder_bound(depth: int, used: frozenset) -> int:
        r1 = Counter(lab1[depth:])
        r2 = Counter(lab2[j] for j in range(n2) if j not in used)
        node_lb = _label_lower_bound(r1, r2)
        # admissible edge term: edges touching a still-unmapped node must pair up
        r1e = sum(1 for (a, b) in e1 if a >= depth or b >= depth)
        r2e = sum(1 for (a, b) in e2 if a not in used or b not in used)
        return node_lb + abs(r1e - r2e)

    def finish_cost(mapping: tuple[int, ...], used: frozenset) -> int:
        # insert every unused g2 node and every g2 edge not already matched
        cost = n2 - len(used)
        inv_map = {j: i for i, j in enumerate(mapping) if j != EPS}
        for (a, b) in e2:
            if a not in inv_map or b not in inv_map:
                cost += 1
        return cost

    start_lb = _label_lower_bound(Counter(lab1), Counter(lab2))
    heap: list[tuple[int, int, int, tuple[int, ...], frozenset]] = []
    counter = 0
    heapq.heappush(heap, (start_lb, 0, counter, (), frozenset()))
    while heap:
        if time.monotonic() > deadline:
            return None
        f, cost, _, mapping, used = heapq.heappop(heap)
        depth = len(mapping)
        if depth == n1:
            return cost + finish_cost(mapping, used)
        i = depth
        candidates = [j for j in range(n2) if j not in used] + [EPS]
        for j in candidates:
            c = cost + expand_cost(i, j, mapping)
            new_used = used | {j} if j != EPS else used
            new_mapping = mapping + (j,)
            if len(new_mapping) == n1:
                lb = c + finish_cost(new_mapping, new_used)
            else:
                lb = c + remainder_bound(depth + 1, new_used)
            counter += 1
            heapq.heappush(heap, (lb, c, counter, new_mapping, new_used))
    return 0  # both graphs empty
