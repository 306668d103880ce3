import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethebox.bbp import BetheBounds, bbp_run
from bethebox.bethe import bethe_free_energy, edge_free_energy, hessian_bounds
from bethebox.errors import ResourceError
from bethebox.mesh import build_energy, build_mesh, label_count, place_labels, rectangle_slack
from bethebox.model import make_mrf
from bethebox.oracle import find_stationary_points

from conftest import assoc_model


@pytest.mark.parametrize(
    "width, gamma, expected",
    [(0.0, 0.1, 1), (0.05, 0.1, 1), (0.2, 0.1, 1), (0.21, 0.1, 2), (0.3, 0.1, 2), (1.0, 0.1, 9)],
)
def test_label_count(width, gamma, expected):
    assert label_count(width, gamma) == expected


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(1e-3, 1.0))
def test_label_count_covers(width, gamma):
    n = label_count(width, gamma)
    assert width / (n + 1) <= gamma * (1 + 1e-12)
    # minimal: one fewer label would not cover
    if n > 1:
        assert width / n > gamma * (1 - 1e-12)


def test_place_labels_interior():
    np.testing.assert_allclose(place_labels(0.2, 0.6, 3), [0.3, 0.4, 0.5])
    np.testing.assert_allclose(place_labels(0.4, 0.4, 1), [0.4])


def test_every_box_point_is_near_a_label():
    lo, hi, k = 0.1, 0.9, 7
    labels = place_labels(lo, hi, k)
    xs = np.linspace(lo, hi, 1001)
    dist = np.min(np.abs(xs[:, None] - labels[None, :]), axis=1)
    assert dist.max() <= (hi - lo) / (k + 1) + 1e-15


def test_single_label_for_point_box():
    m = make_mrf([0.0, 0.0], [(0, 1, 0.5)])
    box = BetheBounds(A=np.array([0.3, 0.4]), B=np.array([0.7, 0.6]))
    mesh = build_mesh(m, box, 0.1)
    assert mesh.sizes == [1, 1]
    assert mesh.epsilon == pytest.approx(0.0, abs=1e-30)


@pytest.mark.parametrize("seed", range(10))
def test_certificate_and_scaling(seed):
    rng = np.random.default_rng(seed)
    m = assoc_model(rng, int(rng.integers(2, 7)))
    box = bbp_run(m)
    coarse = build_mesh(m, box, 0.04)
    fine = build_mesh(m, box, 0.01, bounds=coarse.bounds)
    for mesh in (coarse, fine):
        assert mesh.epsilon <= mesh.requested_epsilon * (1 + 1e-12)
        assert np.all(mesh.radius <= mesh.gamma * (1 + 1e-12))
    assert fine.gamma == pytest.approx(coarse.gamma / 2, rel=1e-12)
    for a, b in zip(coarse.sizes, fine.sizes):
        assert abs(b - 2 * a) <= 1


def test_cap_raises_resource_error():
    m = assoc_model(0, 5)
    box = bbp_run(m)
    with pytest.raises(ResourceError, match="table entries"):
        build_mesh(m, box, 1e-6, cap=1000)
    with pytest.raises(ValueError):
        build_mesh(m, box, 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_energy_decomposes_free_energy(seed):
    rng = np.random.default_rng(seed)
    m = assoc_model(rng, int(rng.integers(2, 7)))
    mesh = build_mesh(m, bbp_run(m), 0.05)
    e = build_energy(m, mesh)
    assert e.sizes == mesh.sizes
    for _ in range(20):
        lab = [int(rng.integers(k)) for k in e.sizes]
        assert e.energy(lab) == pytest.approx(float(bethe_free_energy(m, e.point(lab))), abs=1e-11)


@pytest.mark.parametrize("seed", range(6))
def test_nearest_label_is_within_certificate_of_minimum(seed):
    rng = np.random.default_rng(seed)
    m = assoc_model(rng, int(rng.integers(2, 4)))
    box = bbp_run(m)
    mesh = build_mesh(m, box, 0.01)
    for q0 in find_stationary_points(m, points_per_dim=5):
        near = np.array([lab[np.argmin(np.abs(lab - x))] for lab, x in zip(mesh.labels, q0)])
        assert bethe_free_energy(m, near) - bethe_free_energy(m, q0) <= mesh.epsilon + 1e-12


@pytest.mark.parametrize("w", [0.1, 1.0, 3.0])
def test_rectangle_audit_associative_tables(w):
    labels = np.linspace(0.05, 0.95, 30)
    table = edge_free_energy(w, labels[:, None], labels[None, :])
    assert rectangle_slack(table) <= 1e-12
    # sampled path on a larger table
    big = np.linspace(0.05, 0.95, 60)
    assert rectangle_slack(edge_free_energy(w, big[:, None], big[None, :]), samples=20000) <= 1e-12


def test_rectangle_audit_flags_repulsive_table():
    labels = np.linspace(0.05, 0.95, 10)
    table = edge_free_energy(-1.0, labels[:, None], labels[None, :])
    assert rectangle_slack(table) > 1e-3


def test_rectangle_slack_small_tables():
    assert rectangle_slack(np.zeros((1, 5))) == -math.inf
    # f(s)+f(t)-f(s1,t2)-f(t1,s2) for the single 2x2 rectangle
    assert rectangle_slack(np.array([[0.0, 1.0], [1.0, 0.5]])) == pytest.approx(-1.5)


def test_mesh_uses_given_hessian_bounds():
    m = assoc_model(2, 4)
    box = bbp_run(m)
    hb = hessian_bounds(m, box)
    mesh = build_mesh(m, box, 0.02, bounds=hb)
    assert mesh.lambda_used == hb.lam
    assert mesh.gamma == pytest.approx(math.sqrt(2 * 0.02 / (m.n * hb.lam)))
