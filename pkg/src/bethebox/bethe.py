"""Closed-form Bethe quantities for binary pairwise models.

Everything is expressed in the singleton pseudo-marginals ``q``; the
pairwise belief ``xi = mu_ij(1, 1)`` is eliminated analytically. Functions
broadcast over leading batch axes of ``q`` where that is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConsistencyError, DomainError, UnsupportedModelError
from .model import Mrf

INTERIOR = 1e-9
CLAMP_TOL = 1e-12
SMALL_ALPHA = 1e-12


@dataclass(frozen=True)
class PseudoMarginals:
    q: np.ndarray
    xi: np.ndarray

    @classmethod
    def from_q(cls, m: Mrf, q) -> "PseudoMarginals":
        q = np.asarray(q, dtype=float)
        if q.shape != (m.n,):
            raise DomainError(f"expected {m.n} pseudo-marginals, got shape {q.shape}")
        if np.any(q <= 0) or np.any(q >= 1):
            raise DomainError("pseudo-marginals must lie strictly inside (0, 1)")
        return cls(q=q, xi=solve_xi(m.alpha, q[m.edge_i], q[m.edge_j]))


def _as_q(q):
    if isinstance(q, PseudoMarginals):
        return q.q
    return np.asarray(q, dtype=float)


def _require_interior(*qs):
    for q in qs:
        if np.any(q < INTERIOR) or np.any(q > 1 - INTERIOR):
            raise DomainError(
                f"derivatives need every q in [{INTERIOR:g}, 1 - {INTERIOR:g}]"
            )


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def entr(p):
    """Elementwise -p log p with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def binary_entropy(q):
    return entr(q) + entr(1.0 - np.asarray(q, dtype=float))


def solve_xi(alpha, qi, qj):
    """mu_ij(1,1) minimizing the edge free energy for fixed marginals.

    Root of ``alpha xi^2 - [1 + alpha (qi + qj)] xi + (1 + alpha) qi qj = 0``:
    the lower root for ``alpha > 0``, the higher for ``alpha < 0``. Both are
    ``2c / (b + sqrt(D))`` with ``b = 1 + alpha (qi + qj)``, which is used
    whenever ``b > 0``; when ``b <= 0`` (only possible for strongly repulsive
    edges) the conjugate form avoids the cancellation.
    """
    alpha, qi, qj = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(qi, dtype=float), np.asarray(qj, dtype=float)
    )
    s = qi + qj
    p = qi * qj
    b = 1.0 + alpha * s
    c = (1.0 + alpha) * p
    # expanded so the alpha^2 terms cannot cancel
    disc = 1.0 + 2.0 * alpha * (s - 2.0 * p) + alpha * alpha * (qi - qj) ** 2
    root = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(b > 0, 2.0 * c / (b + root), (b - root) / (2.0 * alpha))
    tiny = np.abs(alpha) < SMALL_ALPHA
    if np.any(tiny):
        xi = np.where(tiny, p + alpha * p * (1.0 - qi) * (1.0 - qj), xi)
    lo = np.maximum(0.0, s - 1.0)
    hi = np.minimum(qi, qj)
    xi = np.clip(xi, lo, hi)
    return xi[()] if xi.ndim == 0 else xi


def xi_residual(alpha, qi, qj, xi):
    return alpha * xi * xi - (1.0 + alpha * (qi + qj)) * xi + (1.0 + alpha) * qi * qj


def xi_bounds(alpha, qi, qj):
    """Lower/upper brackets on ``solve_xi`` for associative edges."""
    alpha, qi, qj = (np.asarray(v, dtype=float) for v in (alpha, qi, qj))
    if np.any(alpha <= 0):
        raise UnsupportedModelError("xi bounds need alpha > 0")
    p = qi * qj
    lower = p + alpha * p * (1 - qi) * (1 - qj) / (1 + alpha * (qi + qj - 2 * p))
    small, big = np.minimum(qi, qj), np.maximum(qi, qj)
    upper = small * (alpha + big) / (1 + alpha)
    return lower, upper


def _mu_from_xi(qi, qj, xi):
    mu = np.stack(
        [
            np.stack([1.0 + xi - qi - qj, qj - xi], axis=-1),
            np.stack([qi - xi, xi], axis=-1),
        ],
        axis=-2,
    )
    if np.any(mu < -CLAMP_TOL):
        raise ConsistencyError(f"pairwise belief entry {mu.min():.3e} is negative")
    return np.maximum(mu, 0.0)


def edge_marginal(alpha, qi, qj):
    """2x2 pairwise pseudo-marginal ``mu[a, b] = p(x_i = a, x_j = b)``."""
    qi, qj = np.broadcast_arrays(np.asarray(qi, dtype=float), np.asarray(qj, dtype=float))
    return _mu_from_xi(qi, qj, solve_xi(alpha, qi, qj))


def edge_free_energy(weight, qi, qj):
    """``f_ij = -W xi - S_ij``, the pairwise part of F."""
    weight = np.asarray(weight, dtype=float)
    xi = solve_xi(np.expm1(weight), qi, qj)
    mu = _mu_from_xi(np.asarray(qi, float), np.asarray(qj, float), xi)
    return -weight * xi - entr(mu).sum(axis=(-2, -1))


def node_free_energy(theta, degree, q):
    """``f_i = -theta q + (z - 1) S_i(q)``."""
    return -theta * q + (degree - 1) * binary_entropy(q)


def bethe_free_energy(m: Mrf, q):
    """Bethe free energy at ``q`` (shape ``(n,)`` or ``(..., n)``)."""
    q = _as_q(q)
    if np.any(q < 0) or np.any(q > 1):
        raise DomainError("pseudo-marginals must lie in [0, 1]")
    qi, qj = q[..., m.edge_i], q[..., m.edge_j]
    edge = edge_free_energy(m.weight, qi, qj).sum(axis=-1)
    node = node_free_energy(m.theta, m.degree, q).sum(axis=-1)
    return edge + node


def _safe_log(x):
    # an underflowed belief entry saturates instead of producing -inf/NaN
    return np.log(np.maximum(x, np.finfo(float).tiny))


def bethe_gradient(m: Mrf, q):
    """dF/dq_i = -theta_i + log Q_i.

    ``log Q_i = (z_i - 1) log((1 - q_i)/q_i)
    + sum_j [log(q_i - xi_ij) - log(1 + xi_ij - q_i - q_j)]``.
    Belief entries that underflow to zero are floored at the smallest
    positive double, so the result saturates near +/-708 per term and is
    never NaN.
    """
    q = _as_q(q)
    _require_interior(q)
    qi, qj = q[..., m.edge_i], q[..., m.edge_j]
    mu = edge_marginal(m.alpha, qi, qj)
    log00 = _safe_log(mu[..., 0, 0])
    to_i = _safe_log(mu[..., 1, 0]) - log00
    to_j = _safe_log(mu[..., 0, 1]) - log00
    grad = -m.theta + (m.degree - 1) * (np.log1p(-q) - np.log(q))
    return grad + _scatter(to_i, m.edge_i, m.n) + _scatter(to_j, m.edge_j, m.n)


def _scatter(vals, idx, n):
    """Sum per-edge values into per-node slots along the last axis."""
    lead = vals.shape[:-1]
    out = np.zeros((int(np.prod(lead, dtype=int)), n))
    if len(idx):
        np.add.at(out, (slice(None), idx), vals.reshape(-1, len(idx)))
    return out.reshape(lead + (n,))


def edge_second_derivs(alpha, qi, qj):
    """Second partials of ``f_ij`` and the determinant term ``T_ij``.

    Returns ``(f_ii, f_ij, f_jj, T)`` with
    ``T = qi qj (1-qi)(1-qj) - (xi - qi qj)^2``,
    ``f_ii = qj(1-qj)/T``, ``f_jj = qi(1-qi)/T``, ``f_ij = (qi qj - xi)/T``.
    T is evaluated as the sum of the four triple products of belief
    entries, which is algebraically equal and free of cancellation.
    """
    qi, qj = np.broadcast_arrays(np.asarray(qi, dtype=float), np.asarray(qj, dtype=float))
    _require_interior(qi, qj)
    mu = edge_marginal(alpha, qi, qj)
    m00, m01, m10, m11 = mu[..., 0, 0], mu[..., 0, 1], mu[..., 1, 0], mu[..., 1, 1]
    t = m00 * m01 * m10 + m00 * m01 * m11 + m00 * m10 * m11 + m01 * m10 * m11
    return qj * (1 - qj) / t, (qi * qj - m11) / t, qi * (1 - qi) / t, t


def bethe_hessian(m: Mrf, q, dense=False):
    """Hessian of F at interior ``q`` as a symmetric CSR matrix (or ndarray)."""
    q = _as_q(q)
    _require_interior(q)
    qi, qj = q[m.edge_i], q[m.edge_j]
    f_ii, f_ij, f_jj, _ = edge_second_derivs(m.alpha, qi, qj)
    diag = -(m.degree - 1) / (q * (1 - q))
    np.add.at(diag, m.edge_i, f_ii)
    np.add.at(diag, m.edge_j, f_jj)
    rows = np.concatenate([np.arange(m.n), m.edge_i, m.edge_j])
    cols = np.concatenate([np.arange(m.n), m.edge_j, m.edge_i])
    vals = np.concatenate([diag, f_ij, f_ij])
    h = sparse.csr_array((vals, (rows, cols)), shape=(m.n, m.n))
    return h.toarray() if dense else h


@dataclass(frozen=True)
class HessianBounds:
    """Entrywise and spectral bounds on H over a Bethe box.

    ``lam`` bounds every eigenvalue magnitude of H at every point of the box.
    """

    a: float
    b: float
    omega: float
    sigma: float
    sigma_bound: float
    lam: float
    K: np.ndarray
    eta: np.ndarray


def hessian_bounds(m: Mrf, box) -> HessianBounds:
    m.require_associative()
    A, B = np.asarray(box.A, dtype=float), np.asarray(box.B, dtype=float)
    eta = np.minimum(A, B)
    if np.any(eta <= 0):
        raise DomainError("Bethe box touches the boundary; bounds are infinite")
    alpha = m.alpha
    ei, ej = m.edge_i, m.edge_j
    g = eta * (1 - eta)
    K = g[ei] * g[ej] * (2 * alpha + 1) / (alpha + 1) ** 2
    a = float(np.max(alpha * (alpha + 1) / (4 * (2 * alpha + 1) * g[ei] * g[ej]), initial=0.0))
    per_edge = (alpha + 1) ** 2 / (2 * alpha + 1)
    acc = 1.0 - m.degree.astype(float)
    np.add.at(acc, ei, per_edge)
    np.add.at(acc, ej, per_edge)
    b = float(np.max(acc / g))
    omega = max(a, b)
    n = m.n
    sigma = (n + 2 * m.num_edges) / n**2
    sigma_bound = (m.max_degree + 1) / n
    lam = n * omega * np.sqrt(sigma)
    return HessianBounds(a=a, b=b, omega=omega, sigma=sigma, sigma_bound=sigma_bound,
                         lam=float(lam), K=K, eta=eta)
