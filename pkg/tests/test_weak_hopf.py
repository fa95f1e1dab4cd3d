import numpy as np
import pytest

from weakhopf._linalg import rel_residual
from weakhopf.errors import InvariantViolation
from weakhopf.groups import cyclic, symmetric
from weakhopf.weak_hopf import (
    cartan_subalgebras,
    connectedness,
    counital_maps,
    double_dual_residual,
    dual_algebra,
    function_algebra,
    group_algebra,
    haar_functional,
    haar_projection,
    haar_traciality_residual,
    pair_groupoid,
    verify_axioms,
)

TOL = 1e-9


def all_examples():
    return [
        ("pg1", pair_groupoid(1)),
        ("pg2", pair_groupoid(2)),
        ("pg3", pair_groupoid(3)),
        ("cyclic2", group_algebra(cyclic(2))),
        ("cyclic3", group_algebra(cyclic(3))),
        ("cyclic4", group_algebra(cyclic(4))),
        ("cyclic5", group_algebra(cyclic(5))),
        ("sym3", group_algebra(symmetric(3))),
        ("fn2", function_algebra(cyclic(2))),
        ("fn3", function_algebra(cyclic(3))),
        ("fn5", function_algebra(cyclic(5))),
    ]


EXAMPLES = all_examples()


@pytest.mark.parametrize("name,hopf", EXAMPLES, ids=[n for n, _ in EXAMPLES])
def test_generator_axioms(name, hopf):
    rep = verify_axioms(hopf, TOL)
    assert rep.passed, rep.render_table()
    assert rep.classification == "weak Kac"
    assert rep.max_residual <= TOL


def test_pair_groupoid_antipode_exactly_involutive():
    for n in (1, 2, 3):
        hopf = pair_groupoid(n)
        assert rel_residual(hopf.antipode @ hopf.antipode,
                            np.eye(hopf.dim)) == 0.0


def test_counital_maps_on_pair_groupoid_units():
    hopf = pair_groupoid(3)
    alg = hopf.algebra
    for i in range(3):
        for j in range(3):
            et, es = counital_maps(hopf, alg.basis_unit(0, i, j))
            assert rel_residual(et.vec, alg.basis_unit(0, i, i).vec) < 1e-14
            assert rel_residual(es.vec, alg.basis_unit(0, j, j).vec) < 1e-14


def test_counital_maps_group_algebra_scalar_cartan():
    hopf = group_algebra(cyclic(3))
    x = hopf.algebra.element(np.arange(1, hopf.dim + 1, dtype=complex))
    et, _ = counital_maps(hopf, x)
    expected = complex(hopf.epsilon @ x.vec) * hopf.algebra.unit().vec
    assert rel_residual(et.vec, expected) < 1e-12
    unit = hopf.algebra.unit()
    et, _ = counital_maps(hopf, unit)
    assert rel_residual(et.vec, unit.vec) < 1e-12


@pytest.mark.parametrize("name,hopf", EXAMPLES, ids=[n for n, _ in EXAMPLES])
def test_counital_maps_idempotent(name, hopf):
    et, es = hopf.target_counital, hopf.source_counital
    assert rel_residual(et @ et, et) < TOL
    assert rel_residual(es @ es, es) < TOL


def test_cartan_subalgebras():
    pair = cartan_subalgebras(pair_groupoid(3))
    assert pair.target.sub.blocks == (1, 1, 1)
    assert pair.source.sub.blocks == (1, 1, 1)
    pair = cartan_subalgebras(group_algebra(cyclic(4)))
    assert pair.target.sub.dim == 1
    pair = cartan_subalgebras(function_algebra(cyclic(4)))
    assert pair.target.sub.dim == 1


@pytest.mark.parametrize("hopf", [pair_groupoid(3), group_algebra(cyclic(3))],
                         ids=["pg3", "cyclic3"])
def test_cartan_membership_characterization(hopf):
    # z in the target Cartan iff its coproduct is the unit coproduct with z
    # multiplied into the first leg
    pair = cartan_subalgebras(hopf)
    e1 = hopf.delta_unit
    for j in range(pair.target.sub.dim):
        z = pair.target.images[:, j]
        lhs = np.tensordot(z, hopf.delta, axes=([0], [0]))
        first = hopf.algebra.mul_vecs(np.eye(hopf.dim), z)  # rows: u_p z
        rhs = np.einsum("pq,pr->rq", e1, first)
        assert rel_residual(lhs, rhs) < TOL


def test_haar_projection_oracles():
    for n in (2, 3):
        hopf = pair_groupoid(n)
        p = haar_projection(hopf)
        assert rel_residual(p.vec, np.full(hopf.dim, 1.0 / n)) < TOL
    for group in (cyclic(2), cyclic(3), cyclic(5), symmetric(3)):
        hopf = group_algebra(group)
        p = haar_projection(hopf)
        oracle = hopf.group_basis.mean(axis=1)
        assert rel_residual(p.vec, oracle) < TOL


def test_haar_projection_trivial_algebra():
    hopf = pair_groupoid(1)
    assert rel_residual(haar_projection(hopf).vec, [1.0]) < 1e-14


def test_haar_projection_invariants():
    hopf = pair_groupoid(3)
    p = haar_projection(hopf).vec
    et = hopf.target_counital
    assert rel_residual(et @ p, hopf.unit_vec) < TOL
    eye = np.eye(hopf.dim)
    xp = hopf.algebra.mul_vecs(eye, p)
    etxp = hopf.algebra.mul_vecs((et @ eye).T, p)
    assert rel_residual(xp, etxp) < TOL


def test_haar_functional_oracles():
    for n in (2, 3):
        hopf = pair_groupoid(n)
        phi = haar_functional(hopf)
        alg = hopf.algebra
        expected = sum(alg.basis_unit(0, i, i).vec for i in range(n))
        assert rel_residual(phi, expected) < TOL
    for group in (cyclic(2), cyclic(4), symmetric(3)):
        hopf = group_algebra(group)
        phi = haar_functional(hopf)
        values = hopf.group_basis.T @ phi
        oracle = np.zeros(group.order)
        oracle[group.identity] = 1.0
        assert rel_residual(values, oracle) < TOL


@pytest.mark.parametrize("name,hopf", EXAMPLES[:8], ids=[n for n, _ in EXAMPLES[:8]])
def test_haar_functional_tracial_for_weak_kac(name, hopf):
    phi = haar_functional(hopf)
    assert haar_traciality_residual(hopf, phi) < TOL


def test_haar_degenerate_system_rejected():
    hopf = pair_groupoid(2)
    broken = hopf.copy_with(epsilon=np.array([1.0, 0, 0, 1.0], dtype=complex))
    with pytest.raises(InvariantViolation):
        haar_projection(broken)


@pytest.mark.parametrize("name,hopf", EXAMPLES, ids=[n for n, _ in EXAMPLES])
def test_dual_algebra_is_valid(name, hopf):
    dual = dual_algebra(hopf)
    rep = verify_axioms(dual.hopf, TOL)
    assert rep.passed, rep.render_table()
    assert rep.classification == "weak Kac"


def test_dual_of_cyclic_group_algebra_is_commutative():
    for n in (2, 3, 4, 5):
        dual = dual_algebra(group_algebra(cyclic(n)))
        assert dual.hopf.dim == n
        assert dual.hopf.algebra.blocks == (1,) * n


def test_dual_of_pair_groupoid_is_commutative():
    dual = dual_algebra(pair_groupoid(2))
    assert dual.hopf.algebra.blocks == (1, 1, 1, 1)


@pytest.mark.parametrize("name,hopf", EXAMPLES, ids=[n for n, _ in EXAMPLES])
def test_double_dual_recovers_structure(name, hopf):
    assert double_dual_residual(hopf) < 1e-12


def test_function_algebra_matches_dual_of_group_algebra():
    group = cyclic(3)
    direct = function_algebra(group)
    rep = verify_axioms(direct)
    assert rep.passed and rep.classification == "weak Kac"
    dual = dual_algebra(group_algebra(group))
    # both are commutative of dimension |G| with the same integral data
    assert dual.hopf.algebra.blocks == direct.algebra.blocks
    lhs = complex(direct.epsilon @ haar_projection(direct).vec)
    rhs = complex(dual.hopf.epsilon @ haar_projection(dual.hopf).vec)
    assert abs(lhs - rhs) < TOL


def test_connectedness_triples():
    assert connectedness(group_algebra(cyclic(2))) == (True, True, True)
    assert connectedness(group_algebra(cyclic(5))) == (True, True, True)
    assert connectedness(pair_groupoid(2)) == (True, False, False)
    assert connectedness(pair_groupoid(3)) == (True, False, False)
    assert connectedness(pair_groupoid(1)) == (True, True, True)


def test_broken_counit_fails_loudly():
    hopf = pair_groupoid(2)
    eps = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex)  # delta_ij on the units
    broken = hopf.copy_with(epsilon=eps)
    rep = verify_axioms(broken)
    assert not rep.passed
    assert rep.classification == "invalid"
    counit_rows = [c for c in rep.checks if c.name.startswith("counit")]
    assert any(c.residual >= 1.0 for c in counit_rows)


def test_explicit_involution_roundtrip():
    hopf = pair_groupoid(2)
    explicit = hopf.copy_with(involution=hopf.star_matrix.copy())
    rep = verify_axioms(explicit)
    assert rep.passed and rep.classification == "weak Kac"


def test_invalid_multiplication_table_rejected():
    from weakhopf.groups import FiniteGroup

    with pytest.raises(InvariantViolation, match="invalid multiplication table"):
        FiniteGroup([[0, 1], [1, 1]])
    with pytest.raises(InvariantViolation, match="invalid multiplication table"):
        FiniteGroup([[0, 0], [0, 0]])
    # a table with a relabeled identity is still a group
    FiniteGroup([[1, 0], [0, 1]])


def test_haar_data_bundle():
    from weakhopf.weak_hopf import haar_data

    data = haar_data(pair_groupoid(2))
    assert rel_residual(data.projection.vec, np.full(4, 0.5)) < TOL
    assert rel_residual(data.functional, [1, 0, 0, 1]) < TOL
