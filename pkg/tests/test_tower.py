import numpy as np
import pytest

from weakhopf._linalg import rel_residual
from weakhopf.errors import InvariantViolation
from weakhopf.groups import cyclic
from weakhopf.tower import TowerData, build_tower_from_group, verify_tower_premises

from conftest import TOWER_NAMES

TOL = 1e-9

EXPECTED = {
    "z2": dict(order=2, ambient_dim=8, a_blocks=(2,), d=2),
    "z3": dict(order=3, ambient_dim=27, a_blocks=(3,), d=3),
    "z4": dict(order=4, ambient_dim=64, a_blocks=(4,), d=4),
    "s3": dict(order=6, ambient_dim=216, a_blocks=(6,), d=6),
}


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_tower_shapes(name, get_tower):
    tower = get_tower(name)
    info = EXPECTED[name]
    assert abs(1.0 / tower.lam - info["order"]) < 1e-12
    assert tower.ambient.dim == info["ambient_dim"]
    assert tower.rel_a.sub.blocks == info["a_blocks"]
    assert tower.rel_b.sub.dim == info["order"] ** 2
    assert all(m == 1 for m in tower.rel_b.sub.blocks)
    assert tower.d == info["d"]
    assert tower.rel_a.sub.dim == tower.rel_b.sub.dim


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_tower_premises(name, get_tower):
    rep = verify_tower_premises(get_tower(name))
    assert rep.passed, rep.render_table()
    assert rep.max_residual <= TOL


def test_trivial_group_rejected():
    with pytest.raises(InvariantViolation):
        build_tower_from_group(cyclic(1))


def test_corrupted_jones_projection_detected(get_tower):
    tower = get_tower("z2")
    rng = np.random.default_rng(11)
    vec = rng.standard_normal(tower.ambient.dim) + 0j
    herm = 0.5 * (vec + tower.ambient.adjoint_vecs(vec))
    proj = tower.ambient.apply_spectral(herm, lambda v: (v > 0).astype(float))
    corrupted = TowerData(tower.ambient, tower.sub_start, tower.sub_mid,
                          tower.sub_top, tower.e1, tower.ambient.element(proj),
                          tower.tau, tower.lam, seed=tower.seed,
                          commutant_start=tower.commutant_start,
                          commutant_mid=tower.commutant_mid)
    rep = verify_tower_premises(corrupted)
    assert not rep.passed
    markov = rep["e2 Markov trace identity"]
    implement = rep["e2 implements expectation onto M"]
    assert markov.residual > 1e-3 or implement.residual > 1e-3


@pytest.mark.parametrize("name", ["z2", "z3"])
def test_trace_restriction_consistency(name, get_tower):
    # the ambient trace restricted to the middle algebra is the Markov trace
    tower = get_tower(name)
    mid = tower.sub_mid
    values = tower.tau.values(mid.images.T)
    n = int(round(1.0 / tower.lam))
    diag_units = [i for i, (_, k, l) in enumerate(mid.sub.basis_labels()) if k == l]
    assert rel_residual(values[diag_units], np.full(len(diag_units), 1.0 / n)) < TOL
