import numpy as np
import pytest

from bethebox.errors import ResourceError, UnsupportedModelError
from bethebox.mesh import build_energy
from bethebox.model import make_mrf, random_tree
from bethebox.oracle import exact_inference, exhaustive_labeling_min, grid_min_bethe
from bethebox.pipeline import optimize

from conftest import assoc_model


def test_pair_optimum():
    m = make_mrf([0.0, 0.0], [(0, 1, np.log(2))])
    r = optimize(m, 1e-3)
    # tree: global Bethe minimum is -log 5 at q = (0.6, 0.6)
    assert -np.log(5) <= r.F <= -np.log(5) + 1e-3
    np.testing.assert_allclose(r.q, [0.6, 0.6], atol=r.mesh.gamma + 1e-3)
    assert r.box.contains(r.q)


@pytest.mark.parametrize("seed", range(8))
def test_labeling_is_the_mesh_minimum(seed):
    rng = np.random.default_rng(seed)
    m = assoc_model(rng, int(rng.integers(2, 5)))
    r = optimize(m, 0.2)
    e = build_energy(m, r.mesh)
    best, _ = exhaustive_labeling_min(e)
    assert r.labeling.energy == pytest.approx(best, rel=1e-10, abs=1e-12)


def test_methods_agree():
    m = assoc_model(3, 5)
    a = optimize(m, 0.02, method="push_relabel")
    b = optimize(m, 0.02, method="dinic")
    assert a.F == pytest.approx(b.F, abs=1e-10)


def test_rejects_repulsive_models():
    m = make_mrf([0.0, 0.0, 0.0], [(0, 1, 1.0), (1, 2, -0.5)])
    with pytest.raises(UnsupportedModelError, match=r"\(1, 2\)"):
        optimize(m, 0.1)


def test_resource_guard():
    with pytest.raises(ResourceError):
        optimize(assoc_model(0, 5), 1e-7, cap=10_000)


@pytest.mark.parametrize("seed", range(5))
def test_tree_close_to_exact(seed):
    t = random_tree(6, seed)
    log_z, p = exact_inference(t)
    r = optimize(t, 0.01)
    assert -log_z - 1e-9 <= r.F <= -log_z + 0.01
    assert np.max(np.abs(r.q - p)) <= r.mesh.gamma + 1e-3


def test_beats_coarse_grid():
    m = assoc_model(5, 3)
    r = optimize(m, 0.01)
    _, g = grid_min_bethe(m, 60)
    assert r.F <= g + 0.01
