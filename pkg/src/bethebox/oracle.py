"""Brute-force ground truth for small models.

Nothing here is clever: exhaustive enumeration, exhaustive grids, finite
differences and Jacobi rotations. Each entry point has a size guard that
raises ResourceError instead of truncating.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .bethe import bethe_free_energy, bethe_gradient, bethe_hessian, edge_second_derivs, sigmoid
from .errors import ResourceError
from .model import Mrf

MAX_EXACT_N = 25
MAX_GRID_POINTS = 10**7
MAX_LABELINGS = 10**6
_CHUNK = 1 << 16


def _states(start, stop, n):
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(float)


def exact_inference(m: Mrf, max_n=MAX_EXACT_N):
    """log Z and exact singleton marginals ``p(x_i = 1)`` by enumeration."""
    if m.n > max_n:
        raise ResourceError(f"exact inference limited to n <= {max_n}, model has n = {m.n}")
    total = 2**m.n
    log_z = -math.inf
    acc = np.zeros(m.n)  # sum of exp(-E - shift) * x, rescaled as shift moves
    shift = None
    for start in range(0, total, _CHUNK):
        x = _states(start, min(start + _CHUNK, total), m.n)
        neg_e = -m.energy(x)
        top = float(neg_e.max())
        if shift is None:
            shift = top
        elif top > shift:
            acc *= math.exp(shift - top)
            shift = top
        w = np.exp(neg_e - shift)
        acc += w @ x
        chunk_log = shift + math.log(w.sum())
        log_z = np.logaddexp(log_z, chunk_log)
    marginals = acc * math.exp(shift - log_z)
    return float(log_z), marginals


def partition_function_direct(m: Mrf, max_n=16):
    """Plain sum of exp(-E) over all states, no log-domain tricks."""
    if m.n > max_n:
        raise ResourceError(f"direct summation limited to n <= {max_n}")
    x = _states(0, 2**m.n, m.n)
    return float(np.exp(-m.energy(x)).sum())


def grid_axes(m: Mrf, points_per_dim, box=None):
    """Per-node grid coordinates ``k / (P + 1)``, restricted to the box.

    A node whose bracket contains no grid point keeps the two grid points
    on either side of it.
    """
    grid = np.arange(1, points_per_dim + 1) / (points_per_dim + 1)
    if box is None:
        return [grid] * m.n
    axes = []
    for lo, hi in zip(box.A, 1.0 - np.asarray(box.B)):
        inside = grid[(grid >= lo) & (grid <= hi)]
        if len(inside) == 0:
            below = grid[grid < lo]
            above = grid[grid > hi]
            inside = np.concatenate([below[-1:], above[:1]])
        axes.append(inside)
    return axes


def grid_min_bethe(m: Mrf, points_per_dim, box=None, limit=MAX_GRID_POINTS):
    """Exhaustive minimum of F over the uniform interior grid (within ``box``)."""
    axes = grid_axes(m, points_per_dim, box)
    count = math.prod(len(a) for a in axes)
    if count > limit:
        raise ResourceError(f"grid has {count} points, limit is {limit}")
    best_f, best_q = math.inf, None
    sizes = [len(a) for a in axes]
    for start in range(0, count, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, count))
        idx = np.stack(np.unravel_index(flat, sizes), axis=-1)
        q = np.stack([axes[i][idx[:, i]] for i in range(m.n)], axis=-1)
        f = bethe_free_energy(m, q)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_q = float(f[k]), q[k].copy()
    return best_q, best_f


def _hessian_batch(m: Mrf, q):
    """Dense Hessians for a ``(B, n)`` batch of interior points."""
    qi, qj = q[:, m.edge_i], q[:, m.edge_j]
    f_ii, f_ij, f_jj, _ = edge_second_derivs(m.alpha, qi, qj)
    h = np.zeros(q.shape + (m.n,))
    idx = np.arange(m.n)
    h[:, idx, idx] = -(m.degree - 1) / (q * (1 - q))
    for e, (i, j) in enumerate(zip(m.edge_i, m.edge_j)):
        h[:, i, i] += f_ii[:, e]
        h[:, j, j] += f_jj[:, e]
        h[:, i, j] += f_ij[:, e]
        h[:, j, i] += f_ij[:, e]
    return h


def _solve_batch(a, b):
    try:
        return np.linalg.solve(a, b[..., None])[..., 0], np.ones(len(a), dtype=bool)
    except np.linalg.LinAlgError:
        out = np.zeros_like(b)
        ok = np.ones(len(a), dtype=bool)
        for k in range(len(a)):
            try:
                out[k] = np.linalg.solve(a[k], b[k])
            except np.linalg.LinAlgError:
                ok[k] = False
        return out, ok


def find_stationary_points(m: Mrf, points_per_dim=9, tol=1e-10, max_iter=100):
    """Stationary points of F located by Newton's method from every grid start.

    All starts iterate together in logit coordinates, so iterates stay
    inside (0, 1). Returns an array of distinct converged points (possibly
    empty).
    """
    grid = np.arange(1, points_per_dim + 1) / (points_per_dim + 1)
    q0 = np.array(list(itertools.product(grid, repeat=m.n)))
    if len(q0) > MAX_GRID_POINTS:
        raise ResourceError(f"{len(q0)} Newton starts exceeds limit {MAX_GRID_POINTS}")
    u = np.log(q0) - np.log1p(-q0)
    live = np.ones(len(u), dtype=bool)
    done = np.zeros(len(u), dtype=bool)
    for _ in range(max_iter):
        act = np.flatnonzero(live & ~done)
        if len(act) == 0:
            break
        q = sigmoid(u[act])
        edge = np.any((q < 1e-8) | (q > 1 - 1e-8), axis=1)
        live[act[edge]] = False
        act, q = act[~edge], q[~edge]
        if len(act) == 0:
            break
        g = bethe_gradient(m, q)
        conv = np.max(np.abs(g), axis=1) < tol
        done[act[conv]] = True
        act, q, g = act[~conv], q[~conv], g[~conv]
        if len(act) == 0:
            break
        jac = _hessian_batch(m, q) * (q * (1 - q))[:, None, :]
        step, ok = _solve_batch(jac, g)
        live[act[~ok]] = False
        scale = np.minimum(1.0, 2.0 / np.maximum(np.max(np.abs(step), axis=1), 1e-300))
        u[act] -= scale[:, None] * step
    found = []
    for q in sigmoid(u[done]):
        if not any(np.allclose(q, p, atol=1e-7) for p in found):
            found.append(q)
    return np.array(found).reshape(-1, m.n)


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1.0)


def fd_gradient(m: Mrf, q, h=1e-5):
    q = np.asarray(q, dtype=float)
    eye = np.eye(m.n) * h
    pts = np.concatenate([q + eye, q - eye])
    f = bethe_free_energy(m, pts)
    return (f[: m.n] - f[m.n :]) / (2 * h)


def fd_hessian(m: Mrf, q, h=1e-4):
    q = np.asarray(q, dtype=float)
    n = m.n
    eye = np.eye(n) * h
    pp = q + eye[:, None, :] + eye[None, :, :]
    pm = q + eye[:, None, :] - eye[None, :, :]
    mp = q - eye[:, None, :] + eye[None, :, :]
    mm = q - eye[:, None, :] - eye[None, :, :]
    f = bethe_free_energy(m, np.stack([pp, pm, mp, mm]))
    hess = (f[0] - f[1] - f[2] + f[3]) / (4 * h * h)
    return (hess + hess.T) / 2


def fd_check(m: Mrf, q, h_grad=1e-5, h_hess=1e-4):
    """Max relative deviation of the analytic gradient and Hessian from
    central differences of F.

    Deviations are ``|analytic - fd| / max(|fd|, 1)``.
    """
    q = np.asarray(q, dtype=float)
    margin = max(2 * h_hess, 1e-4)
    if np.any(q < margin) or np.any(q > 1 - margin):
        raise ValueError(f"fd_check needs q at least {margin:g} from the boundary")
    g_err = float(np.max(_rel(bethe_gradient(m, q), fd_gradient(m, q, h_grad))))
    h_err = float(np.max(_rel(bethe_hessian(m, q, dense=True), fd_hessian(m, q, h_hess))))
    return g_err, h_err


def jacobi_eigenvalues(a, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    n = len(a)
    if n == 0:
        return np.zeros(0)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if abs(apr) <= 1e-300:
                    continue
                tau = (a[r, r] - a[p, p]) / (2.0 * apr)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[r, r] = c
                rot[p, r], rot[r, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def exhaustive_labeling_min(e, limit=MAX_LABELINGS):
    """Minimum of a DiscreteEnergy over all labelings, with one minimizer."""
    sizes = e.sizes
    count = math.prod(sizes)
    if count > limit:
        raise ResourceError(f"{count} labelings exceeds limit {limit}")
    total = np.zeros(sizes)
    for i, u in enumerate(e.unary):
        shape = [1] * e.n
        shape[i] = sizes[i]
        total = total + np.asarray(u).reshape(shape)
    for idx, (i, j) in enumerate(zip(e.edge_i, e.edge_j)):
        shape = [1] * e.n
        shape[i], shape[j] = sizes[i], sizes[j]
        table = np.asarray(e.pairwise[idx])
        total = total + (table if i < j else table.T).reshape(shape)
    k = int(np.argmin(total))
    return float(total.reshape(-1)[k]), tuple(int(v) for v in np.unravel_index(k, sizes))
