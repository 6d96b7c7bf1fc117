"""Wait-for graphs and cycle detection.

The search core works on successor bitmasks held in integer arrays and
uses only constructs numba can compile, so the exact same routine can be
JIT-compiled for exhaustive sweeps over small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def find_cycle_rows(rows: np.ndarray, n: int, out: np.ndarray) -> int:
    """Iterative three-colour DFS over ``rows[i]`` = successor mask of node i.

    Writes the nodes of one cycle, in edge order, into ``out`` and returns
    its length; returns 0 when the graph is acyclic.
    """
    return search_cycle(rows, n, out, np.zeros(n, np.int8), np.zeros(n, np.int64),
                        np.zeros(n, np.int64))


def search_cycle(rows: np.ndarray, n: int, out: np.ndarray, color: np.ndarray,
                 stack: np.ndarray, remaining: np.ndarray) -> int:
    """Body of :func:`find_cycle_rows` with caller-provided scratch arrays."""
    for i in range(n):
        color[i] = 0
    for start in range(n):
        if color[start] != 0:
            continue
        depth = 0
        stack[0] = start
        remaining[0] = rows[start]
        color[start] = 1
        while depth >= 0:
            rem = remaining[depth]
            if rem == 0:
                color[stack[depth]] = 2
                depth -= 1
                continue
            low = rem & -rem
            remaining[depth] = rem ^ low
            v = 0
            while low > 1:
                low >>= 1
                v += 1
            if color[v] == 1:
                pos = 0
                while stack[pos] != v:
                    pos += 1
                length = depth - pos + 1
                for k in range(length):
                    out[k] = stack[pos + k]
                return length
            if color[v] == 0:
                depth += 1
                stack[depth] = v
                remaining[depth] = rows[v]
                color[v] = 1
    return 0


@dataclass
class WaitForGraph:
    """Blocked processors pointing at the processors they wait on.

    ``edges[(waiter, target)]`` is the set of regions that induce the edge.
    """

    nodes: set[int] = field(default_factory=set)
    edges: dict[tuple[int, int], set[int]] = field(default_factory=dict)

    def add_edge(self, waiter: int, target: int, region: int | None = None) -> None:
        if waiter == target:
            raise ValueError("a processor cannot wait on itself")
        self.nodes.update((waiter, target))
        labels = self.edges.setdefault((waiter, target), set())
        if region is not None:
            labels.add(region)

    def successors(self, node: int) -> list[int]:
        return sorted(t for (w, t) in self.edges if w == node)


def detect_deadlock(graph: WaitForGraph) -> list[int] | None:
    """Return one wait-for cycle as a list of processors, or None."""
    order = sorted(graph.nodes)
    if not graph.edges:
        return None
    index = {p: i for i, p in enumerate(order)}
    n = len(order)
    if n > 62:
        raise ValueError("wait-for graphs above 62 processors are not supported")
    rows = np.zeros(n, np.int64)
    for (w, t) in graph.edges:
        rows[index[w]] |= 1 << index[t]
    out = np.zeros(n, np.int64)
    length = find_cycle_rows(rows, n, out)
    if length == 0:
        return None
    return [order[int(i)] for i in out[:length]]
