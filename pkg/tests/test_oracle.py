import math

import numpy as np
import pytest

from bethebox.bbp import BetheBounds
from bethebox.bethe import bethe_hessian
from bethebox.errors import ResourceError
from bethebox.model import make_mrf
from bethebox.oracle import (
    exact_inference,
    fd_check,
    find_stationary_points,
    grid_axes,
    grid_min_bethe,
    jacobi_eigenvalues,
    partition_function_direct,
)

from conftest import mixed_model


def test_pair_partition_function():
    # exp(0) + exp(0) + exp(0) + exp(ln 2)
    m = make_mrf([0.0, 0.0], [(0, 1, math.log(2))])
    log_z, p = exact_inference(m)
    assert log_z == pytest.approx(math.log(5), abs=1e-15)
    np.testing.assert_allclose(p, [0.6, 0.6], atol=1e-15)
    assert partition_function_direct(m) == pytest.approx(5.0, rel=1e-15)


def test_single_node():
    m = make_mrf([1.3], [])
    log_z, p = exact_inference(m)
    assert log_z == pytest.approx(math.log1p(math.exp(1.3)))
    assert p[0] == pytest.approx(1 / (1 + math.exp(-1.3)))


@pytest.mark.parametrize("seed", range(10))
def test_log_domain_matches_direct(seed):
    m = mixed_model(seed, 10)
    log_z, _ = exact_inference(m)
    assert log_z == pytest.approx(math.log(partition_function_direct(m)), rel=1e-12)


def test_chunked_enumeration_matches_single_chunk():
    # n = 18 spans several chunks; fields large enough to move the running shift
    m = mixed_model(4, 18, p=0.3, scale=6.0)
    log_z, p = exact_inference(m)
    x = ((np.arange(2**18)[:, None] >> np.arange(18)) & 1).astype(float)
    neg = -m.energy(x)
    top = neg.max()
    w = np.exp(neg - top)
    assert log_z == pytest.approx(top + math.log(w.sum()), rel=1e-13)
    np.testing.assert_allclose(p, (w @ x) / w.sum(), atol=1e-12)


def test_guards():
    m = make_mrf([0.0] * 30, [(i, i + 1, 0.1) for i in range(29)])
    with pytest.raises(ResourceError):
        exact_inference(m)
    with pytest.raises(ResourceError):
        partition_function_direct(m)
    with pytest.raises(ResourceError, match="grid"):
        grid_min_bethe(m, 10)


def test_grid_axes_and_box_restriction():
    m = make_mrf([0.0, 0.0], [(0, 1, 1.0)])
    axes = grid_axes(m, 9)
    np.testing.assert_allclose(axes[0], np.arange(1, 10) / 10)
    box = BetheBounds(A=np.array([0.25, 0.52]), B=np.array([0.45, 0.47]))
    axes = grid_axes(m, 9, box)
    np.testing.assert_allclose(axes[0], [0.3, 0.4, 0.5])
    # an empty bracket keeps its two neighbouring grid points
    np.testing.assert_allclose(axes[1], [0.5, 0.6])


def test_grid_min_symmetric_pair():
    m = make_mrf([-0.5, -0.5], [(0, 1, 1.0)])
    q, f = grid_min_bethe(m, 99)
    # the unbiased pair is symmetric under q -> 1 - q; the grid minimum is on the diagonal
    assert q[0] == pytest.approx(q[1])
    assert f <= -1.0


def test_stationary_points_of_pair():
    m = make_mrf([0.0, 0.0], [(0, 1, math.log(2))])
    pts = find_stationary_points(m, points_per_dim=5)
    assert len(pts) == 1
    np.testing.assert_allclose(pts[0], [0.6, 0.6], atol=1e-9)


def test_fd_check_small_alpha_edge():
    m = make_mrf([0.2, -0.1], [(0, 1, 1e-9)])
    g_err, h_err = fd_check(m, [0.3, 0.6])
    assert g_err < 1e-6 and h_err < 1e-4
    assert abs(bethe_hessian(m, [0.3, 0.6], dense=True)[0, 1]) < 1e-8


def test_fd_check_margin():
    m = make_mrf([0.0, 0.0], [(0, 1, 1.0)])
    with pytest.raises(ValueError, match="boundary"):
        fd_check(m, [1e-5, 0.5])


@pytest.mark.parametrize("seed", range(5))
def test_jacobi_matches_lapack(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(7, 7))
    a = a + a.T
    np.testing.assert_allclose(jacobi_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-12)
    assert jacobi_eigenvalues(np.zeros((0, 0))).shape == (0,)
