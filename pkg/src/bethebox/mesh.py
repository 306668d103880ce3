"""Discretization of the Bethe box and the resulting multi-label energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bethe import HessianBounds, edge_free_energy, hessian_bounds, node_free_energy
from .errors import ResourceError
from .model import Mrf

DEFAULT_CAP = 2**28


@dataclass(frozen=True)
class Mesh:
    """Per-node label sets covering the Bethe box.

    ``gamma`` is the uniform spacing target, ``radius`` the actual covering
    radius per node (never above ``gamma``). ``epsilon`` is the certified gap
    ``Lambda/2 * sum(radius**2)``; it never exceeds ``requested_epsilon``.
    """

    labels: tuple
    gamma: float
    radius: np.ndarray
    epsilon: float
    requested_epsilon: float
    lambda_used: float
    bounds: HessianBounds

    @property
    def sizes(self) -> list[int]:
        return [len(d) for d in self.labels]

    @property
    def total_labels(self) -> int:
        return sum(self.sizes)


def label_count(width, gamma) -> int:
    """Smallest N with ``width / (N + 1) <= gamma`` (at least one label)."""
    if width <= 0:
        return 1
    return max(1, math.ceil(width / gamma - 1.0))


def place_labels(lower, upper, count) -> np.ndarray:
    """``count`` points at ``lower + k (upper - lower) / (count + 1)``, k = 1..count."""
    width = max(upper - lower, 0.0)
    return lower + width * np.arange(1, count + 1) / (count + 1)


def build_mesh(m: Mrf, box, epsilon, cap=DEFAULT_CAP, bounds=None) -> Mesh:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    hb = bounds if bounds is not None else hessian_bounds(m, box)
    gamma = math.sqrt(2.0 * epsilon / (m.n * hb.lam))
    lo = np.asarray(box.A, dtype=float)
    hi = 1.0 - np.asarray(box.B, dtype=float)
    widths = np.maximum(hi - lo, 0.0)
    counts = [label_count(w, gamma) for w in widths]
    entries = sum(counts) + sum(counts[i] * counts[j] for i, j in zip(m.edge_i, m.edge_j))
    if entries > cap:
        raise ResourceError(
            f"epsilon={epsilon:g} needs {sum(counts)} labels and {entries} table entries "
            f"(cap {cap})"
        )
    labels = tuple(place_labels(lo[i], hi[i], counts[i]) for i in range(m.n))
    radius = widths / (np.array(counts) + 1.0)
    cert = 0.5 * hb.lam * float(np.sum(radius**2))
    return Mesh(
        labels=labels,
        gamma=gamma,
        radius=radius,
        epsilon=cert,
        requested_epsilon=float(epsilon),
        lambda_used=hb.lam,
        bounds=hb,
    )


@dataclass(frozen=True)
class DiscreteEnergy:
    """``sum_i unary[i][x_i] + sum_e pairwise[e][x_i, x_j]`` over label indices."""

    edge_i: np.ndarray
    edge_j: np.ndarray
    unary: tuple
    pairwise: tuple
    labels: tuple | None = None

    @property
    def n(self):
        return len(self.unary)

    @property
    def sizes(self):
        return [len(u) for u in self.unary]

    def energy(self, labeling) -> float:
        x = [int(v) for v in labeling]
        total = sum(float(u[k]) for u, k in zip(self.unary, x))
        for e, (i, j) in enumerate(zip(self.edge_i, self.edge_j)):
            total += float(self.pairwise[e][x[i], x[j]])
        return total

    def point(self, labeling) -> np.ndarray:
        return np.array([self.labels[i][k] for i, k in enumerate(labeling)])


def build_energy(m: Mrf, mesh: Mesh) -> DiscreteEnergy:
    deg = m.degree
    unary = tuple(
        node_free_energy(m.theta[i], deg[i], mesh.labels[i]) for i in range(m.n)
    )
    pairwise = tuple(
        edge_free_energy(w, mesh.labels[i][:, None], mesh.labels[j][None, :])
        for i, j, w in zip(m.edge_i, m.edge_j, m.weight)
    )
    return DiscreteEnergy(
        edge_i=m.edge_i, edge_j=m.edge_j, unary=unary, pairwise=pairwise, labels=mesh.labels
    )


def rectangle_slack(table, exhaustive_limit=30, samples=200_000, rng=0) -> float:
    """Largest ``f(s) + f(t) - f(s1, t2) - f(t1, s2)`` over label rectangles.

    A submodular table gives a value ``<= 0``. Every rectangle is checked
    when both sides have at most ``exhaustive_limit`` labels; otherwise
    ``samples`` random rectangles plus all adjacent 2x2 ones are checked.
    """
    f = np.asarray(table, dtype=float)
    ki, kj = f.shape
    if ki < 2 or kj < 2:
        return -math.inf
    adjacent = f[:-1, :-1] + f[1:, 1:] - f[:-1, 1:] - f[1:, :-1]
    worst = float(adjacent.max())
    if ki <= exhaustive_limit and kj <= exhaustive_limit:
        g = f[:, None, :, None] + f[None, :, None, :] - f[:, None, None, :] - f[None, :, :, None]
        a1, a2 = np.triu_indices(ki, k=1)
        b1, b2 = np.triu_indices(kj, k=1)
        return max(worst, float(g[a1, a2][:, b1, b2].max()))
    gen = np.random.default_rng(rng)
    s1, t1 = np.sort(gen.integers(ki, size=(2, samples)), axis=0)
    s2, t2 = np.sort(gen.integers(kj, size=(2, samples)), axis=0)
    g = f[s1, s2] + f[t1, t2] - f[s1, t2] - f[t1, s2]
    return max(worst, float(g.max()))
