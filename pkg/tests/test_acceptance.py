"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every residual bound is pinned here, nothing is deferred.
"""

import numpy as np
import pytest

from weakhopf import serialize
from weakhopf._linalg import rel_residual, subspace_residual
from weakhopf.actions import fixed_points, verify_action
from weakhopf.cli import main as cli_main
from weakhopf.deform import deform, undeform
from weakhopf.groups import cyclic, symmetric
from weakhopf.matching import match_pair_groupoid
from weakhopf.multimatrix import MultiMatrixAlgebra, TraceState, watatani_index
from weakhopf.reconstruct import classify, identity_suite
from weakhopf.tower import verify_tower_premises
from weakhopf.weak_hopf import (
    _delta_product,
    connectedness,
    double_dual_residual,
    dual_algebra,
    function_algebra,
    group_algebra,
    haar_functional,
    haar_projection,
    pair_groupoid,
    verify_axioms,
)

TOL = 1e-9
TOWERS = ["z2", "z3", "z4", "s3"]
TOWER_ORDER = {"z2": 2, "z3": 3, "z4": 4, "s3": 6}


def report_line(number, label):
    print(f"\n[acceptance {number:02d}] {label}: PASS")


def generator_zoo():
    zoo = [(f"pair-groupoid({n})", pair_groupoid(n)) for n in (1, 2, 3)]
    zoo += [(f"group(Z/{n})", group_algebra(cyclic(n))) for n in (2, 3, 4, 5)]
    zoo.append(("group(S3)", group_algebra(symmetric(3))))
    zoo += [(f"functions(Z/{n})", function_algebra(cyclic(n))) for n in (2, 3, 4, 5)]
    return zoo


def test_acceptance_01_generator_soundness():
    for name, hopf in generator_zoo():
        rep = verify_axioms(hopf, TOL)
        assert rep.passed, f"{name}: {rep.render_table()}"
        assert rep.classification == "weak Kac", name
        assert rep.max_residual <= TOL, name
    for n in (1, 2, 3):
        hopf = pair_groupoid(n)
        assert rel_residual(hopf.antipode @ hopf.antipode,
                            np.eye(hopf.dim)) == 0.0
    report_line(1, "generator soundness")


def test_acceptance_02_integrals():
    for n in (1, 2, 3):
        hopf = pair_groupoid(n)
        assert rel_residual(haar_projection(hopf, TOL).vec,
                            np.full(hopf.dim, 1.0 / n)) <= TOL
        phi = haar_functional(hopf, TOL)
        alg = hopf.algebra
        oracle = sum(alg.basis_unit(0, i, i).vec for i in range(n))
        assert rel_residual(phi, oracle) <= TOL
    for group in (cyclic(2), cyclic(3), cyclic(4), cyclic(5), symmetric(3)):
        hopf = group_algebra(group)
        p = haar_projection(hopf, TOL)
        assert rel_residual(p.vec, hopf.group_basis.mean(axis=1)) <= TOL
        values = hopf.group_basis.T @ haar_functional(hopf, TOL)
        oracle = np.zeros(group.order)
        oracle[group.identity] = 1.0
        assert rel_residual(values, oracle) <= TOL
    for n in (2, 3, 4, 5):
        group = cyclic(n)
        hopf = function_algebra(group)
        point_mass = np.zeros(n)
        point_mass[group.identity] = 1.0
        assert rel_residual(haar_projection(hopf, TOL).vec, point_mass) <= TOL
        assert rel_residual(haar_functional(hopf, TOL), np.full(n, 1.0 / n)) <= TOL
    report_line(2, "Haar integrals match the closed-form oracles")


def test_acceptance_03_duality_involution():
    for name, hopf in generator_zoo():
        assert double_dual_residual(hopf) <= 1e-12, name
    for n in (2, 3, 4, 5):
        dual = dual_algebra(group_algebra(cyclic(n)))
        assert dual.hopf.dim == n
        assert dual.hopf.algebra.blocks == (1,) * n
    report_line(3, "double dual recovers the structure at 1e-12")


def test_acceptance_04_connectedness():
    for n in (2, 3, 4, 5):
        assert connectedness(group_algebra(cyclic(n))) == (True, True, True)
    for n in (2, 3):
        assert connectedness(pair_groupoid(n)) == (True, False, False)
    # the two criteria are cross-checked inside connectedness(); exercising it
    # on every generator asserts their agreement
    for name, hopf in generator_zoo():
        connectedness(hopf)
    report_line(4, "connectedness criteria agree on all generators")


@pytest.mark.parametrize("name", TOWERS)
def test_acceptance_05_tower_premises(name, get_tower):
    tower = get_tower(name)
    rep = verify_tower_premises(tower, TOL)
    assert rep.passed, rep.render_table()
    assert rep.max_residual <= TOL
    assert 1.0 / tower.lam == TOWER_ORDER[name]
    report_line(5, f"tower premises for {name} (index {TOWER_ORDER[name]})")


@pytest.mark.parametrize("name", TOWERS)
def test_acceptance_06_reconstruction(name, get_tower, get_reconstruction):
    tower = get_tower(name)
    rec = get_reconstruction(name)
    suite = identity_suite(tower, rec, TOL)
    assert len(suite.checks) == 17
    assert suite.passed, suite.render_table()
    assert suite.max_residual <= TOL
    assert rel_residual(rec.index_element.vec, tower.ambient.unit().vec) <= TOL
    for check_name, residual in rec.cross_checks.items():
        assert residual <= TOL, f"{check_name}: {residual:.3e}"
    cls = classify(tower, rec, TOL)
    assert cls.passed, cls.render_table()
    assert cls.classification == "weak Kac"
    assert abs(1.0 / tower.lam - TOWER_ORDER[name]) == 0
    if name == "z2":
        # the noncommutative commutant is the pair groupoid on two points and
        # the structure carried by B is its dual (B itself is commutative)
        on_a, on_b, points = match_pair_groupoid(rec, TOL)
        assert points == 2
        assert on_a.residual <= TOL
        assert on_b.residual <= TOL
    report_line(6, f"reconstruction and classification for {name}")


def test_acceptance_06b_commutant_shape_note(get_reconstruction):
    # the commutant carrying (Delta_B, eps_B, S_B) is commutative for these
    # towers, so it cannot be isomorphic to the two-point pair groupoid
    # algebra itself; the groupoid structure lives on the dual side, which
    # criterion 6 verifies through both explicit intertwiners.
    rec = get_reconstruction("z2")
    assert all(m == 1 for m in rec.on_b.hopf.algebra.blocks)
    assert rec.on_a.hopf.algebra.blocks == (2,)


def test_acceptance_07_watatani_arithmetic(get_tower, get_reconstruction):
    cartan = MultiMatrixAlgebra([1, 1])
    trace = TraceState(cartan, [1 / 3, 2 / 3])
    halved = watatani_index(trace).vec / 2
    assert rel_residual(halved, [1.5, 0.75]) < 1e-12
    assert abs(float(np.real(np.dot(trace.weights, halved))) - 1.0) < 1e-12
    for name in TOWERS:
        tower = get_tower(name)
        rec = get_reconstruction(name)
        restricted = TraceState(tower.cartan_target.sub, rec.cartan_weights)
        pushed = tower.cartan_target.embed_vec(
            watatani_index(restricted).vec) / tower.d
        assert rel_residual(pushed, rec.index_element.vec) <= TOL
    report_line(7, "canonical element arithmetic")


def test_acceptance_08_deformation(get_tower, get_pipeline):
    hopf = pair_groupoid(2)
    alg = hopf.algebra

    def twist(a, b):
        return a * alg.basis_unit(0, 0, 0).vec + b * alg.basis_unit(0, 1, 1).vec

    for a, b in ((2.0, 0.5), (1.5, 0.75), (1.0, 3.0)):
        bundle, rep = undeform(hopf, twist(a, b), TOL)
        assert rep.passed and rep.max_residual <= TOL
        prod = np.einsum("ijm,mpq->ijpq", bundle.hopf.mult, bundle.hopf.delta,
                         optimize=True)
        pairs = _delta_product(bundle.hopf, bundle.hopf.delta, bundle.hopf.delta)
        assert rel_residual(prod, pairs) >= 1e-3  # measurably non-multiplicative
        deformed, drep = deform(bundle, TOL)
        assert drep.passed, drep.render_table()
        assert rel_residual(deformed.hopf.delta, hopf.delta) <= TOL
        assert rel_residual(deformed.hopf.star_matrix, hopf.star_matrix) <= TOL
        axioms = verify_axioms(deformed.hopf, TOL)
        assert axioms.passed and axioms.classification in ("weak Kac",
                                                           "weak C*-Hopf")
        assert drep["squared antipode is conjugation by the modular element"] \
            .residual <= TOL
    # on group towers the Haar projection of the deformed structure is the
    # second Jones projection twisted by the (here trivial) index element
    for name in TOWERS:
        pipe = get_pipeline(name)
        row = pipe["deform_report"]["Haar projection is e2 twisted by the index element"]
        assert row.passed
        tower = pipe["tower"]
        e2_b = tower.rel_b.coords_vec(tower.e2.vec[None, :])[0]
        assert rel_residual(haar_projection(pipe["deformed"].hopf, TOL).vec,
                            e2_b) <= TOL
    report_line(8, "twist synthesis, recovery and deformed axioms")


@pytest.mark.parametrize("name", TOWERS)
def test_acceptance_09_actions_and_crossed_products(name, get_tower, get_pipeline):
    tower = get_tower(name)
    pipe = get_pipeline(name)
    action = pipe["action"]
    rep = verify_action(action, TOL)
    assert rep.passed and rep.max_residual <= TOL
    fixed = fixed_points(action)
    mid = tower.sub_mid.restrict_to(tower.sub_top)
    assert fixed.sub.dim == mid.sub.dim
    assert subspace_residual(fixed.images, mid.images) <= 100 * TOL
    crossed = pipe["crossed"]
    assert crossed.dim == tower.ambient.dim
    theta = pipe["theta"]
    assert theta.report.passed, theta.report.render_table()
    minim = pipe["minimality"]
    assert minim.passed, minim.render_table()
    report_line(9, f"canonical action, crossed product and comparison map for {name}")


def test_acceptance_10_negative_controls(tmp_path, capsys):
    # broken counit: rejected with the counit named
    hopf = pair_groupoid(2)
    payload = serialize.weak_hopf_payload(hopf)
    payload["epsilon"] = serialize.element_payload(
        np.array([1.0, 0.0, 0.0, 1.0]))["coefficients"]
    broken = tmp_path / "broken-counit.json"
    broken.write_text(serialize.dumps("weak-hopf", payload))
    code = cli_main(["verify-wha", str(broken)])
    out = capsys.readouterr().out
    assert code == 1
    assert any("FAIL" in line and "counit" in line for line in out.splitlines())

    # non-Markov trace: rejected by name
    code = cli_main(["tower", "from-group", "cyclic", "2"])
    tower_text = capsys.readouterr().out
    doc = serialize.loads(tower_text)
    doc.payload["tau"] = [w * (1.2 if i == 0 else 1.0)
                          for i, w in enumerate(doc.payload["tau"])]
    bad_trace = tmp_path / "bad-trace.json"
    bad_trace.write_text(serialize.dumps("tower", doc.payload))
    code = cli_main(["reconstruct", str(bad_trace)])
    err = capsys.readouterr().err
    assert code == 1
    assert "trace not Markov" in err

    # e2 corrupted: rejected by name
    doc = serialize.loads(tower_text)
    doc.payload["e2"] = [[2.0 * re, 2.0 * im] for re, im in doc.payload["e2"]]
    bad_e2 = tmp_path / "bad-e2.json"
    bad_e2.write_text(serialize.dumps("tower", doc.payload))
    code = cli_main(["reconstruct", str(bad_e2)])
    err = capsys.readouterr().err
    assert code == 1
    assert "e2 not a projection" in err
    report_line(10, "corrupted inputs rejected with named failures")
