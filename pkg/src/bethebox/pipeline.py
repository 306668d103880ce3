"""Bethe box, mesh, and min-cut assembled into one global optimizer."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bbp import DEFAULT_MAX_ITER, DEFAULT_THRESH, BetheBounds, bbp_run
from .bethe import HessianBounds, bethe_free_energy, hessian_bounds
from .errors import ConsistencyError
from .mapcut import Labeling, max_flow, reduce_to_cut, extract_labeling
from .mesh import DEFAULT_CAP, Mesh, build_energy, build_mesh
from .model import Mrf


@dataclass
class OptimizeResult:
    q: np.ndarray
    F: float
    epsilon: float
    box: BetheBounds
    bounds: HessianBounds
    mesh: Mesh
    labeling: Labeling
    flow_nodes: int
    flow_arcs: int
    runtime: float

    @property
    def total_labels(self) -> int:
        return self.mesh.total_labels


def optimize(
    m: Mrf,
    epsilon,
    thresh=DEFAULT_THRESH,
    max_iter=DEFAULT_MAX_ITER,
    cap=DEFAULT_CAP,
    method="push_relabel",
) -> OptimizeResult:
    """Pseudo-marginals whose Bethe free energy is within ``epsilon`` of the
    global minimum. Requires an associative model."""
    t0 = time.perf_counter()
    m.require_associative()
    box = bbp_run(m, thresh=thresh, max_iter=max_iter)
    hb = hessian_bounds(m, box)
    mesh = build_mesh(m, box, epsilon, cap=cap, bounds=hb)
    energy = build_energy(m, mesh)
    g = reduce_to_cut(energy)
    value, side = max_flow(g, method)
    labeling = extract_labeling(g, side, energy, flow_value=value)
    q = energy.point(labeling.labels)
    F = float(bethe_free_energy(m, q))
    if abs(F - labeling.energy) > 1e-10 * max(1.0, abs(F)):
        raise ConsistencyError(f"table energy {labeling.energy!r} != F(q*) {F!r}")
    return OptimizeResult(
        q=q,
        F=F,
        epsilon=mesh.epsilon,
        box=box,
        bounds=hb,
        mesh=mesh,
        labeling=labeling,
        flow_nodes=g.num_nodes,
        flow_arcs=g.num_arcs,
        runtime=time.perf_counter() - t0,
    )
