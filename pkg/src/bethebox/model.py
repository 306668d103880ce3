"""Binary pairwise MRFs.

The energy is ``E(x) = -sum_i theta_i x_i - sum_(i,j) W_ij x_i x_j`` over
``x in {0,1}^n`` and ``p(x) = exp(-E(x)) / Z``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ModelError, ParseError, UnsupportedModelError


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mrf:
    """Immutable binary pairwise model.

    Edges are stored with ``i < j``, sorted, and with nonzero finite weight.
    Use :func:`make_mrf` (or :func:`parse_model`) to build one from loose
    input; the constructor assumes it is already canonical.
    """

    theta: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    weight: np.ndarray
    neighbors: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def num_edges(self) -> int:
        return len(self.weight)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.edge_i, self.edge_j, self.weight)]

    @property
    def alpha(self) -> np.ndarray:
        return np.expm1(self.weight)

    @property
    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=int)

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if self.n else 0

    @property
    def pos_weight(self) -> np.ndarray:
        """W_i: sum of positive incident weights."""
        out = np.zeros(self.n)
        pos = np.where(self.weight > 0, self.weight, 0.0)
        np.add.at(out, self.edge_i, pos)
        np.add.at(out, self.edge_j, pos)
        return out

    @property
    def neg_weight(self) -> np.ndarray:
        """V_i: negated sum of negative incident weights (so V_i >= 0)."""
        out = np.zeros(self.n)
        neg = np.where(self.weight < 0, -self.weight, 0.0)
        np.add.at(out, self.edge_i, neg)
        np.add.at(out, self.edge_j, neg)
        return out

    @property
    def is_associative(self) -> bool:
        return bool(np.all(self.weight > 0))

    def require_associative(self):
        bad = np.flatnonzero(self.weight <= 0)
        if len(bad):
            e = int(bad[0])
            raise UnsupportedModelError(
                f"edge ({self.edge_i[e]}, {self.edge_j[e]}) has weight {self.weight[e]!r}; "
                "an associative model (all W_ij > 0) is required"
            )

    def components(self) -> list[list[int]]:
        seen = np.zeros(self.n, dtype=bool)
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in self.neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def subgraph(self, nodes: Sequence[int]) -> "Mrf":
        """Induced submodel on ``nodes``, relabelled 0..len(nodes)-1 in the given order."""
        index = {int(v): k for k, v in enumerate(nodes)}
        edges = [
            (index[i], index[j], w)
            for i, j, w in self.edges
            if i in index and j in index
        ]
        return make_mrf(self.theta[list(nodes)], edges, allow_disconnected=True)

    def energy(self, x) -> np.ndarray:
        """E(x) for one state or a batch of states along the last axis."""
        x = np.asarray(x, dtype=float)
        pair = x[..., self.edge_i] * x[..., self.edge_j]
        return -(x @ self.theta) - pair @ self.weight

    def __eq__(self, other):
        if not isinstance(other, Mrf):
            return NotImplemented
        return (
            np.array_equal(self.theta, other.theta)
            and np.array_equal(self.edge_i, other.edge_i)
            and np.array_equal(self.edge_j, other.edge_j)
            and np.array_equal(self.weight, other.weight)
        )

    __hash__ = None


def make_mrf(theta: Iterable[float], edges: Iterable[tuple[int, int, float]], allow_disconnected=False) -> Mrf:
    """Validate and canonicalize.

    Raises ModelError on self-loops, duplicate edges, zero or non-finite
    weights, non-finite fields, bad indices, and (unless
    ``allow_disconnected``) a disconnected graph.
    """
    theta = np.array(list(theta), dtype=float)
    n = len(theta)
    if n == 0:
        raise ModelError("model has no nodes")
    bad = np.flatnonzero(~np.isfinite(theta))
    if len(bad):
        raise ModelError(f"theta {bad[0]} is not finite ({theta[bad[0]]!r})")

    canon = {}
    for i, j, w in edges:
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise ModelError(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
        if i == j:
            raise ModelError(f"self-loop on node {i}")
        if not math.isfinite(w):
            raise ModelError(f"edge ({i}, {j}) has non-finite weight {w!r}")
        if w == 0.0:
            raise ModelError(f"edge ({i}, {j}) has zero weight; delete it instead")
        key = (min(i, j), max(i, j))
        if key in canon:
            raise ModelError(f"duplicate edge {key}")
        canon[key] = w

    keys = sorted(canon)
    neighbors = [[] for _ in range(n)]
    for i, j in keys:
        neighbors[i].append(j)
        neighbors[j].append(i)
    m = Mrf(
        theta=_frozen(theta, float),
        edge_i=_frozen([k[0] for k in keys], np.intp),
        edge_j=_frozen([k[1] for k in keys], np.intp),
        weight=_frozen([canon[k] for k in keys], float),
        neighbors=tuple(tuple(nb) for nb in neighbors),
    )
    if not allow_disconnected and not m.is_connected():
        comps = m.components()
        raise ModelError(
            f"graph is disconnected ({len(comps)} components; node {comps[1][0]} "
            "is not reachable from node 0)"
        )
    return m


def flip(m: Mrf, flipped: Iterable[int]) -> Mrf:
    """Reparameterize in terms of ``y_i = 1 - x_i`` for ``i`` in ``flipped``.

    Every state keeps its energy up to one additive constant. Edges with
    exactly one flipped end change sign. Flipped fields are negated; the
    unflipped end of a sign-changing edge gains ``W`` and both ends of a
    doubly flipped edge lose ``W``. Flipping the result again with
    the same set returns ``m`` itself, so the round trip is bit-identical.
    """
    r = np.zeros(m.n, dtype=bool)
    for v in flipped:
        v = int(v)
        if not 0 <= v < m.n:
            raise ModelError(f"flip index {v} outside 0..{m.n - 1}")
        r[v] = True
    if not r.any():
        return m
    key = frozenset(np.flatnonzero(r).tolist())
    origin = getattr(m, "_flip_origin", None)
    if origin is not None and origin[0] == key:
        # undoing the same flip: return the exact original, no rounding drift
        return origin[1]
    ri, rj = r[m.edge_i], r[m.edge_j]
    one_end = ri ^ rj
    both = ri & rj
    phi = np.where(r, -m.theta, m.theta)
    # E_1 edges feed their unflipped end, E_2 edges feed both (flipped) ends.
    s_end = np.where(ri, m.edge_j, m.edge_i)
    np.add.at(phi, s_end[one_end], m.weight[one_end])
    np.add.at(phi, m.edge_i[both], -m.weight[both])
    np.add.at(phi, m.edge_j[both], -m.weight[both])
    new_w = np.where(one_end, -m.weight, m.weight)
    out = Mrf(
        theta=_frozen(phi, float),
        edge_i=m.edge_i,
        edge_j=m.edge_j,
        weight=_frozen(new_w, float),
        neighbors=m.neighbors,
    )
    object.__setattr__(out, "_flip_origin", (key, m))
    return out


def unbias_reparam(thetas, weights, allow_disconnected=False) -> Mrf:
    """Shift ``theta_i <- theta_i - sum_j W_ij / 2``.

    Starting from the symmetric edge potential ``diag(W/2, W/2)`` this gives
    the equivalent ``W x_i x_j`` form; with ``theta = 0`` every state has the
    same energy as its global flip.
    """
    m = make_mrf(thetas, weights, allow_disconnected=allow_disconnected)
    adj = np.zeros(m.n)
    np.add.at(adj, m.edge_i, m.weight)
    np.add.at(adj, m.edge_j, m.weight)
    return Mrf(
        theta=_frozen(m.theta - adj / 2.0, float),
        edge_i=m.edge_i,
        edge_j=m.edge_j,
        weight=m.weight,
        neighbors=m.neighbors,
    )


def random_model(
    n,
    p,
    rng,
    theta_range=(0.0, 1.0),
    weight_range=(0.0, 1.0),
    unbias=True,
    connected=False,
    max_tries=1000,
):
    """Erdos-Renyi model with uniform fields and weights.

    The default arguments give the 100-node benchmark family when called
    with ``n=100, p=0.04``. ``connected=True`` resamples the graph until it
    is connected. Weights of exactly zero are redrawn.
    """
    rng = np.random.default_rng(rng)
    for _ in range(max_tries):
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(len(iu)) < p
        iu, ju = iu[keep], ju[keep]
        if connected and not _connected(n, iu, ju):
            continue
        break
    else:
        raise ModelError(f"no connected G({n}, {p}) sample in {max_tries} tries")
    theta = rng.uniform(*theta_range, size=n)
    w = rng.uniform(*weight_range, size=len(iu))
    while np.any(w == 0.0):
        w[w == 0.0] = rng.uniform(*weight_range, size=int(np.sum(w == 0.0)))
    edges = list(zip(iu.tolist(), ju.tolist(), w.tolist()))
    if unbias:
        return unbias_reparam(theta, edges, allow_disconnected=True)
    return make_mrf(theta, edges, allow_disconnected=True)


def random_tree(n, rng, theta_range=(-1.0, 1.0), weight_range=(0.1, 1.0)):
    """Uniform random recursive tree (node k attaches to a node < k)."""
    rng = np.random.default_rng(rng)
    theta = rng.uniform(*theta_range, size=n)
    edges = []
    for k in range(1, n):
        edges.append((int(rng.integers(k)), k, float(rng.uniform(*weight_range))))
    return make_mrf(theta, edges)


def _connected(n, iu, ju):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(iu, ju):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(a) for a in range(n)}) == 1


# --- model file format -----------------------------------------------------


def _parse_float(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return v


def _parse_int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"not an integer: {tok!r}", lineno) from None


def parse_model(text, allow_disconnected=False) -> Mrf:
    """Parse the line-oriented model format.

    ::

        nodes <n>
        theta <i> <float>      # exactly n of these, one per node
        edge <i> <j> <float>   # zero or more

    ``#`` starts a comment. ``text`` may be ``str`` or UTF-8 ``bytes``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    n = None
    theta = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        kw = toks[0]
        if n is None:
            if kw != "nodes" or len(toks) != 2:
                raise ParseError("expected 'nodes <n>' as the first statement", lineno)
            n = _parse_int(toks[1], lineno)
            if n < 1:
                raise ParseError(f"node count must be positive, got {n}", lineno)
            continue
        if kw == "theta":
            if len(toks) != 3:
                raise ParseError("expected 'theta <i> <float>'", lineno)
            if edges:
                raise ParseError("theta lines must precede edge lines", lineno)
            i = _parse_int(toks[1], lineno)
            if not 0 <= i < n:
                raise ParseError(f"theta index {i} outside 0..{n - 1}", lineno)
            if i in theta:
                raise ParseError(f"duplicate theta for node {i}", lineno)
            theta[i] = _parse_float(toks[2], lineno)
        elif kw == "edge":
            if len(toks) != 4:
                raise ParseError("expected 'edge <i> <j> <float>'", lineno)
            if len(theta) != n:
                raise ParseError(f"edge before all {n} theta lines", lineno)
            i, j = _parse_int(toks[1], lineno), _parse_int(toks[2], lineno)
            edges.append((i, j, _parse_float(toks[3], lineno), lineno))
        elif kw == "nodes":
            raise ParseError("repeated 'nodes' statement", lineno)
        else:
            raise ParseError(f"unknown statement {kw!r}", lineno)
    if n is None:
        raise ParseError("empty model file")
    if len(theta) != n:
        missing = min(set(range(n)) - set(theta))
        raise ParseError(f"missing theta line for node {missing}")
    # re-raise edge validation with line numbers
    seen = set()
    for i, j, w, lineno in edges:
        try:
            make_mrf([0.0] * n, [(i, j, w)], allow_disconnected=True)
        except ModelError as exc:
            raise ModelError(f"line {lineno}: {exc}") from None
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ModelError(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
    return make_mrf([theta[i] for i in range(n)], [e[:3] for e in edges], allow_disconnected)


def serialize_model(m: Mrf) -> str:
    lines = [f"nodes {m.n}"]
    lines += [f"theta {i} {t:.17g}" for i, t in enumerate(m.theta)]
    lines += [f"edge {i} {j} {w:.17g}" for i, j, w in m.edges]
    return "\n".join(lines) + "\n"


def load_model(path, allow_disconnected=False) -> Mrf:
    with open(path, "rb") as fh:
        return parse_model(fh.read(), allow_disconnected=allow_disconnected)
