"""Exact minimization of a submodular multi-label energy by a single min-cut.

Variable ``i`` with ``K_i`` ordered labels gets ``K_i - 1`` layer nodes;
layer ``k`` sits on the source side iff ``x_i > k``. Infinite arcs from
layer ``k + 1`` to layer ``k`` forbid inconsistent cuts, unary first
differences become terminal arcs, and pairwise second differences
``c(k, l) = f(k, l+1) + f(k+1, l) - f(k, l) - f(k+1, l+1) >= 0`` become arcs
from layer ``(i, k)`` to layer ``(j, l)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import maxflow
from .errors import ConsistencyError, ModelError
from .mesh import DiscreteEnergy

SOURCE, SINK = 0, 1
SUBMODULAR_TOL = 1e-10
ENERGY_RTOL = 1e-8


class NonSubmodularError(ConsistencyError):
    pass


@dataclass
class FlowNetwork:
    """Capacitated digraph plus the bookkeeping to read labels back.

    ``cut value - constant`` equals the energy of the labeling the cut
    encodes, for every cut that does not sever an ordering arc.
    """

    num_nodes: int
    arcs: list
    layer_start: list
    sizes: list
    constant: float
    infinite: float
    finite_scale: float

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def layer(self, i, k) -> int:
        return self.layer_start[i] + k

    def dump(self) -> str:
        """Plain-text arc list: a ``<nodes> <arcs>`` header then ``arc u v cap`` lines."""
        out = io.StringIO()
        out.write(f"{self.num_nodes} {self.num_arcs}\n")
        out.write(f"# source {SOURCE} sink {SINK}\n")
        for u, v, c in self.arcs:
            out.write(f"arc {u} {v} {c:.17g}\n")
        return out.getvalue()


@dataclass(frozen=True)
class Labeling:
    labels: tuple
    energy: float


def second_differences(table):
    f = np.asarray(table, dtype=float)
    return f[:-1, 1:] + f[1:, :-1] - f[:-1, :-1] - f[1:, 1:]


def reduce_to_cut(e: DiscreteEnergy, tol=SUBMODULAR_TOL) -> FlowNetwork:
    sizes = e.sizes
    if any(k < 1 for k in sizes):
        raise ModelError("every variable needs at least one label")
    layer_start, nxt = [], 2
    for k in sizes:
        layer_start.append(nxt)
        nxt += k - 1
    num_nodes = nxt

    # e(x) = const + sum_(i,k) d[i][k] z_ik + sum c_ikjl z_ik (1 - z_jl)
    const = 0.0
    diffs = []
    for u in e.unary:
        u = np.asarray(u, dtype=float)
        const += float(u[0])
        diffs.append(np.diff(u).astype(float))
    pair_arcs = []
    for idx, (i, j) in enumerate(zip(e.edge_i, e.edge_j)):
        f = np.asarray(e.pairwise[idx], dtype=float)
        const += float(f[0, 0])
        if len(f) > 1:
            diffs[i] += f[1:, 0] - f[:-1, 0]
        if f.shape[1] > 1:
            diffs[j] += f[0, 1:] - f[0, :-1]
        if f.shape[0] > 1 and f.shape[1] > 1:
            c = second_differences(f)
            worst = float(c.min())
            if worst < -tol:
                raise NonSubmodularError(
                    f"edge ({i}, {j}) is not submodular: second difference {worst:.3e}"
                )
            c = np.maximum(c, 0.0)
            # -c z_ik w_jl = -c z_ik + c z_ik (1 - w_jl)
            diffs[i] -= c.sum(axis=1)
            for k, l in zip(*np.nonzero(c)):
                pair_arcs.append(
                    (layer_start[i] + int(k), layer_start[j] + int(l), float(c[k, l]))
                )

    arcs = []
    for i, d in enumerate(diffs):
        for k, dk in enumerate(d):
            node = layer_start[i] + k
            if dk > 0:
                arcs.append((node, SINK, float(dk)))
            elif dk < 0:
                arcs.append((SOURCE, node, float(-dk)))
                const += float(dk)
    arcs.extend(pair_arcs)
    finite_total = sum(c for _, _, c in arcs)
    scale = max((c for _, _, c in arcs), default=1.0)
    infinite = finite_total + 1.0
    for i, k in enumerate(sizes):
        for layer in range(k - 2):
            arcs.append((layer_start[i] + layer + 1, layer_start[i] + layer, infinite))
    return FlowNetwork(
        num_nodes=num_nodes,
        arcs=arcs,
        layer_start=layer_start,
        sizes=list(sizes),
        constant=-const,
        infinite=infinite,
        finite_scale=scale,
    )


def max_flow(g: FlowNetwork, method="push_relabel"):
    """Returns ``(flow_value, source_side)`` with ``source_side[v]`` a bool per node."""
    solver = {"push_relabel": maxflow.push_relabel, "dinic": maxflow.dinic}.get(method)
    if solver is None:
        raise ValueError(f"unknown max-flow method {method!r}")
    tol = 1e-14 * max(g.finite_scale, 1.0)
    value, side, _ = solver(g.num_nodes, g.arcs, SOURCE, SINK, tol=tol)
    return value, side


def decode_cut(g: FlowNetwork, source_side) -> list[int]:
    labels = []
    for i, k in enumerate(g.sizes):
        layers = [source_side[g.layer(i, t)] for t in range(k - 1)]
        # lowest layer on the sink side; all layers on the source side means the top label
        x = next((t for t, s in enumerate(layers) if not s), k - 1)
        if any(layers[x:]):
            raise ConsistencyError(f"cut severs an ordering arc of variable {i}")
        labels.append(x)
    return labels


def extract_labeling(g: FlowNetwork, source_side, e: DiscreteEnergy, flow_value=None) -> Labeling:
    """Decode a cut and recompute its energy from the tables.

    The energy must match ``cut capacity - constant`` (and ``flow_value -
    constant`` when given) to ``ENERGY_RTOL`` relative.
    """
    labels = decode_cut(g, source_side)
    energy = e.energy(labels)
    checks = [("cut capacity", maxflow.cut_capacity(g.arcs, source_side))]
    if flow_value is not None:
        checks.append(("flow value", flow_value))
    for what, value in checks:
        implied = value - g.constant
        if abs(energy - implied) > ENERGY_RTOL * max(1.0, abs(energy)):
            raise ConsistencyError(
                f"labeling energy {energy!r} disagrees with {what} - constant = {implied!r}"
            )
    return Labeling(labels=tuple(labels), energy=energy)


def minimize(e: DiscreteEnergy, method="push_relabel") -> Labeling:
    g = reduce_to_cut(e)
    value, side = max_flow(g, method)
    return extract_labeling(g, side, e, flow_value=value)
