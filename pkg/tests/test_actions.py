import numpy as np
import pytest

from weakhopf._linalg import rel_residual, subspace_residual
from weakhopf.actions import (
    ActionData,
    crossed_product,
    fixed_points,
    minimality,
    verify_action,
)
from weakhopf.groups import cyclic
from weakhopf.multimatrix import MultiMatrixAlgebra
from weakhopf.weak_hopf import group_algebra, pair_groupoid

TOL = 1e-9


def trivial_scalar_action(carrier):
    """The one-dimensional structure acting by scalars."""
    hopf = pair_groupoid(1)
    tensor = np.eye(carrier.dim, dtype=complex)[None, :, :]
    return ActionData(hopf, carrier, tensor)


def counit_action(hopf, carrier):
    """b |> x = eps(b) x; a genuine action when the counit is an algebra map."""
    tensor = np.einsum("b,xy->bxy", hopf.epsilon, np.eye(carrier.dim, dtype=complex))
    return ActionData(hopf, carrier, tensor)


def test_trivial_action_passes():
    rep = verify_action(trivial_scalar_action(MultiMatrixAlgebra([2, 1])))
    assert rep.passed, rep.render_table()


def test_trivial_action_fixed_points_everything():
    action = trivial_scalar_action(MultiMatrixAlgebra([2]))
    fixed = fixed_points(action)
    assert fixed.sub.dim == 4


@pytest.mark.parametrize("name", ["z2", "z3", "z4", "s3"])
def test_canonical_action_verifies(name, get_pipeline):
    rep = verify_action(get_pipeline(name)["action"])
    assert rep.passed, rep.render_table()
    assert rep.max_residual <= TOL


@pytest.mark.parametrize("name", ["z2", "z3"])
def test_canonical_action_oracles(name, get_tower, get_pipeline):
    tower = get_tower(name)
    action = get_pipeline(name)["action"]
    rng = np.random.default_rng(3)
    x = rng.standard_normal(action.carrier.dim) + 1j * rng.standard_normal(
        action.carrier.dim)
    # the unit acts trivially
    assert rel_residual(action.act(action.hopf.unit_vec, x), x) < TOL
    # the second Jones projection acts as the expectation onto M
    e2_b = tower.rel_b.coords_vec(tower.e2.vec[None, :])[0]
    lhs = action.act(e2_b, x)
    ambient_x = tower.sub_top.embed_vec(x)
    rhs = tower.sub_top.coords_vec(tower.expect_mid.apply_vec(ambient_x)[None, :])[0]
    assert rel_residual(lhs, rhs) < TOL
    # Cartan elements act by left multiplication
    bt_in_b = tower.rel_b.coords_vec(tower.cartan_target.images.T).T
    bt_in_top = tower.sub_top.coords_vec(tower.cartan_target.images.T).T
    for j in range(bt_in_b.shape[1]):
        lhs = action.act(bt_in_b[:, j], x)
        rhs = action.carrier.mul_vecs(bt_in_top[:, j], x)
        assert rel_residual(lhs, rhs) < TOL


@pytest.mark.parametrize("name", ["z2", "z3", "z4", "s3"])
def test_fixed_points_recover_middle_algebra(name, get_tower, get_pipeline):
    tower = get_tower(name)
    fixed = fixed_points(get_pipeline(name)["action"])
    mid_in_top = tower.sub_mid.restrict_to(tower.sub_top)
    assert fixed.sub.dim == tower.sub_mid.sub.dim
    assert subspace_residual(fixed.images, mid_in_top.images) <= 100 * TOL


@pytest.mark.parametrize("name", ["z2", "z3", "z4", "s3"])
def test_crossed_product_dimension(name, get_tower, get_pipeline):
    tower = get_tower(name)
    crossed = get_pipeline(name)["crossed"]
    assert crossed.dim == tower.ambient.dim
    assert sorted(crossed.algebra.blocks) == sorted(tower.ambient.blocks)


@pytest.mark.parametrize("name", ["z2", "z3", "z4", "s3"])
def test_minimality(name, get_pipeline):
    rep = get_pipeline(name)["minimality"]
    assert rep.passed, rep.render_table()


@pytest.mark.parametrize("name", ["z2", "z3", "z4", "s3"])
def test_theta(name, get_pipeline):
    theta = get_pipeline(name)["theta"]
    assert theta.report.passed, theta.report.render_table()


def test_theta_reduces_to_plain_product_when_untwisted(get_tower, get_pipeline):
    # for unit twist theta sends a class of x (x) b to the plain product x b
    name = "z2"
    tower = get_tower(name)
    pipe = get_pipeline(name)
    crossed, theta = pipe["crossed"], pipe["theta"]
    alg = tower.ambient
    top = tower.sub_top.images
    b_img = tower.rel_b.images
    for k, (x, b) in enumerate(crossed.basis):
        direct = alg.mul_vecs(top[:, x], b_img[:, b])
        assert rel_residual(theta.matrix[:, k], direct) < TOL


def test_theta_unit_class(get_pipeline):
    pipe = get_pipeline("z2")
    theta, crossed = pipe["theta"], pipe["crossed"]
    tower_unit = pipe["tower"].ambient.unit().vec
    assert rel_residual(theta.matrix @ crossed.unit, tower_unit) < TOL


def test_source_cartan_commutes_inside_crossed_product(get_pipeline):
    crossed = get_pipeline("z3")["crossed"]
    q = crossed.dim
    for j in range(crossed.source_embedding.shape[1]):
        z = crossed.source_embedding[:, j]
        for x in range(crossed.carrier_embedding.shape[1]):
            m = crossed.carrier_embedding[:, x]
            assert rel_residual(crossed.product(z, m), crossed.product(m, z)) < TOL


def test_elementary_source_relation(get_tower, get_pipeline):
    # [1 (x) z][x (x) 1] = [x (x) z] = [x (x) 1][1 (x) z] on the source Cartan
    name = "z2"
    tower = get_tower(name)
    pipe = get_pipeline(name)
    crossed = pipe["crossed"]
    hopf = pipe["deformed"].hopf
    db = hopf.dim
    dm = crossed.action.carrier.dim
    src = crossed.source_span
    for j in range(src.shape[1]):
        z = crossed.quotient_map @ np.kron(
            crossed.action.carrier.unit().vec, src[:, j])
        for x in range(dm):
            xe = crossed.quotient_map @ np.kron(
                np.eye(dm)[x], hopf.unit_vec)
            xz = crossed.quotient_map @ np.kron(np.eye(dm)[x], src[:, j])
            assert rel_residual(crossed.product(z, xe), xz) < TOL
            assert rel_residual(crossed.product(xe, z), xz) < TOL


def test_hopf_case_has_full_tensor_dimension():
    # scalar Cartan: no balancing, the crossed product is the full tensor space
    hopf = group_algebra(cyclic(2))
    carrier = MultiMatrixAlgebra([1])
    action = counit_action(hopf, carrier)
    assert verify_action(action).passed
    crossed = crossed_product(action)
    assert crossed.dim == carrier.dim * hopf.dim


def test_trivial_group_action_is_not_minimal():
    hopf = group_algebra(cyclic(3))
    carrier = MultiMatrixAlgebra([1])
    action = counit_action(hopf, carrier)
    crossed = crossed_product(action)
    rep = minimality(crossed)
    assert not rep.passed  # everything commutes with the scalars


def test_scalar_structure_minimal_trivially():
    carrier = MultiMatrixAlgebra([2])
    action = trivial_scalar_action(carrier)
    crossed = crossed_product(action)
    rep = minimality(crossed)
    assert rep.passed


def test_twisted_action_fails_star_axiom(get_pipeline):
    action = get_pipeline("z2")["action"]
    twisted = ActionData(action.hopf, action.carrier, 1j * action.tensor)
    rep = verify_action(twisted)
    assert not rep.passed
    assert rep["action star-compatible"].residual > 1e-3
