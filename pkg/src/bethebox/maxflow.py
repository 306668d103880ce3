"""Max-flow / min-cut on small dense-ish networks with float capacities.

Two solvers share one residual representation: highest-label push-relabel
with the gap heuristic and periodic global relabelling (the default), and
Dinic's blocking-flow method for cross-checking.
"""

from __future__ import annotations

from collections import deque

import numpy as np


class Residual:
    """Paired-arc residual graph. Arc ``e`` and ``e ^ 1`` are mutual reverses."""

    def __init__(self, num_nodes, arcs):
        self.n = num_nodes
        self.head = []
        self.res = []
        self.adj = [[] for _ in range(num_nodes)]
        for u, v, c in arcs:
            e = len(self.head)
            self.head += [v, u]
            self.res += [float(c), 0.0]
            self.adj[u].append(e)
            self.adj[v].append(e + 1)

    def reaches(self, target, tol):
        """Mask of nodes with a residual path to ``target``."""
        seen = [False] * self.n
        seen[target] = True
        queue = deque([target])
        head, res, adj = self.head, self.res, self.adj
        while queue:
            v = queue.popleft()
            for e in adj[v]:
                u = head[e]
                # arc e ^ 1 goes u -> v
                if not seen[u] and res[e ^ 1] > tol:
                    seen[u] = True
                    queue.append(u)
        return seen


def _tolerance(arcs):
    finite = [c for _, _, c in arcs if np.isfinite(c)]
    scale = max(finite, default=1.0)
    return 1e-14 * max(scale, 1.0)


def push_relabel(num_nodes, arcs, source, sink, tol=None):
    """Returns ``(flow_value, source_side_mask, residual)``."""
    n = num_nodes
    g = Residual(n, arcs)
    tol = _tolerance(arcs) if tol is None else tol
    head, res, adj = g.head, g.res, g.adj
    excess = [0.0] * n
    height = [0] * n
    current = [0] * n
    buckets = [[] for _ in range(2 * n + 1)]
    count = [0] * (2 * n + 1)
    active = [False] * n

    def global_relabel():
        for v in range(n):
            height[v] = n
        height[sink] = 0
        queue = deque([sink])
        while queue:
            v = queue.popleft()
            for e in adj[v]:
                u = head[e]
                if height[u] == n and u != source and res[e ^ 1] > tol:
                    height[u] = height[v] + 1
                    queue.append(u)
        height[source] = n
        for h in range(len(count)):
            count[h] = 0
            buckets[h] = []
        for v in range(n):
            current[v] = 0
            if height[v] < n:
                count[height[v]] += 1
        for v in range(n):
            active[v] = False
            if v != source and v != sink and excess[v] > tol and height[v] < n:
                buckets[height[v]].append(v)
                active[v] = True

    for e in adj[source]:
        if e % 2 == 0:
            c = res[e]
            if c > 0:
                v = head[e]
                res[e] -= c
                res[e ^ 1] += c
                excess[v] += c
                excess[source] -= c
    global_relabel()

    top = n - 1
    work = 0
    relabel_every = 6 * n + len(head)
    while True:
        while top >= 0 and not buckets[top]:
            top -= 1
        if top < 0:
            break
        u = buckets[top].pop()
        active[u] = False
        edges = adj[u]
        hu = height[u]
        ex = excess[u]
        while ex > tol:
            i = current[u]
            if i == len(edges):
                best = 2 * n
                for e in edges:
                    if res[e] > tol and height[head[e]] < best:
                        best = height[head[e]]
                work += len(edges) + 12
                count[hu] -= 1
                if count[hu] == 0:
                    # gap: nodes above hu can no longer reach the sink
                    for v in range(n):
                        if hu < height[v] < n:
                            count[height[v]] -= 1
                            height[v] = n
                            active[v] = False
                    for h in range(hu + 1, n):
                        buckets[h] = []
                    best = 2 * n
                hu = best + 1
                if hu >= n:
                    height[u] = n
                    break
                height[u] = hu
                count[hu] += 1
                current[u] = 0
                continue
            e = edges[i]
            v = head[e]
            r = res[e]
            if r > tol and hu == height[v] + 1:
                d = ex if ex < r else r
                res[e] = r - d
                res[e ^ 1] += d
                ex -= d
                excess[v] += d
                if not active[v] and v != sink and v != source:
                    active[v] = True
                    buckets[hu - 1].append(v)
                    if hu - 1 > top:
                        top = hu - 1
            else:
                current[u] = i + 1
        excess[u] = ex
        if work > relabel_every:
            work = 0
            global_relabel()
            top = n - 1

    to_sink = g.reaches(sink, tol)
    source_side = [not x for x in to_sink]
    return excess[sink], source_side, g


def dinic(num_nodes, arcs, source, sink, tol=None):
    """Returns ``(flow_value, source_side_mask, residual)``."""
    n = num_nodes
    g = Residual(n, arcs)
    tol = _tolerance(arcs) if tol is None else tol
    head, res, adj = g.head, g.res, g.adj
    flow = 0.0
    while True:
        level = [-1] * n
        level[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for e in adj[u]:
                v = head[e]
                if level[v] < 0 and res[e] > tol:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[sink] < 0:
            break
        it = [0] * n
        while True:
            # iterative DFS for one augmenting path in the level graph
            path = []
            u = source
            while u != sink:
                edges = adj[u]
                while it[u] < len(edges):
                    e = edges[it[u]]
                    v = head[e]
                    if res[e] > tol and level[v] == level[u] + 1:
                        break
                    it[u] += 1
                if it[u] == len(edges):
                    if not path:
                        u = None
                        break
                    level[u] = -1
                    e = path.pop()
                    u = head[e ^ 1]
                    it[u] += 1
                    continue
                e = edges[it[u]]
                path.append(e)
                u = head[e]
            if u is None:
                break
            d = min(res[e] for e in path)
            for e in path:
                res[e] -= d
                res[e ^ 1] += d
            flow += d
    reach = [False] * n
    reach[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for e in adj[u]:
            v = head[e]
            if not reach[v] and res[e] > tol:
                reach[v] = True
                queue.append(v)
    return flow, reach, g


def cut_capacity(arcs, source_side):
    return sum(c for u, v, c in arcs if source_side[u] and not source_side[v])
