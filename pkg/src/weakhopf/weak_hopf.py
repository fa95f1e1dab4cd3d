"""Abstract finite-dimensional weak Kac / weak C*-Hopf algebras.

Structure tensors live over the canonical matrix-unit basis of the underlying
multimatrix algebra; the involution is either that basis adjoint or an
explicitly supplied antilinear map (needed for deformed structures).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._linalg import (
    intersection_dim,
    max_abs,
    null_space,
    rel_residual,
    subspace_residual,
)
from .decompose import StructureAlgebra, decompose_structure_algebra
from .errors import InvariantViolation
from .groups import FiniteGroup
from .multimatrix import (
    DEFAULT_TOL,
    AlgebraElement,
    MultiMatrixAlgebra,
    SubalgebraEmbedding,
    subalgebra_from_basis,
)
from .report import Report


def canonical_involution_matrix(algebra: MultiMatrixAlgebra) -> np.ndarray:
    """The block adjoint as an antilinear matrix: x* = J conj(x)."""
    eye = np.eye(algebra.dim, dtype=complex)
    return algebra.adjoint_vecs(eye).T


class WeakHopfData:
    """Comultiplication / counit / antipode tensors over a multimatrix algebra.

    ``delta[i, p, q]`` is the coefficient of ``u_p (x) u_q`` in the coproduct
    of the i-th basis unit; ``antipode[:, j]`` is the image of the j-th unit.
    ``involution`` is None for the canonical block adjoint, otherwise an
    antilinear matrix J acting as x* = J conj(x).
    """

    def __init__(self, algebra: MultiMatrixAlgebra, delta, epsilon, antipode,
                 involution=None):
        self.algebra = algebra
        d = algebra.dim
        self.delta = np.asarray(delta, dtype=complex)
        self.epsilon = np.asarray(epsilon, dtype=complex).reshape(-1)
        self.antipode = np.asarray(antipode, dtype=complex)
        if self.delta.shape != (d, d, d) or self.epsilon.shape != (d,) \
                or self.antipode.shape != (d, d):
            raise InvariantViolation("structure tensor shapes are inconsistent")
        if involution is None:
            self.involution = None
        else:
            involution = np.asarray(involution, dtype=complex)
            if involution.shape != (d, d):
                raise InvariantViolation("involution matrix has wrong shape")
            self.involution = involution

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @cached_property
    def star_matrix(self) -> np.ndarray:
        if self.involution is None:
            return canonical_involution_matrix(self.algebra)
        return self.involution

    def star(self, vecs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.conj(vecs), self.star_matrix, axes=([-1], [1]))

    @cached_property
    def mult(self) -> np.ndarray:
        return self.algebra.mult_tensor

    @cached_property
    def unit_vec(self) -> np.ndarray:
        return self.algebra.unit().vec

    @cached_property
    def delta_unit(self) -> np.ndarray:
        """Coproduct of the unit as a (d, d) coefficient matrix."""
        return np.tensordot(self.unit_vec, self.delta, axes=([0], [0]))

    @cached_property
    def _eps_of_products(self) -> np.ndarray:
        """eps(u_p u_b) as a (p, b) matrix."""
        return np.einsum("pbk,k->pb", self.mult, self.epsilon)

    @cached_property
    def target_counital(self) -> np.ndarray:
        """Matrix of the target counital map eps_t(b) = eps(1_(1) b) 1_(2)."""
        return np.einsum("pq,pb->qb", self.delta_unit, self._eps_of_products)

    @cached_property
    def source_counital(self) -> np.ndarray:
        """Matrix of the source counital map eps_s(b) = 1_(1) eps(b 1_(2))."""
        return np.einsum("pq,bq->pb", self.delta_unit, self._eps_of_products)

    def apply_delta(self, vecs: np.ndarray) -> np.ndarray:
        """Coproduct of a stack of coefficient vectors, as (..., d, d) tensors."""
        return np.tensordot(np.asarray(vecs, dtype=complex), self.delta,
                            axes=([-1], [0]))

    def copy_with(self, **kwargs) -> "WeakHopfData":
        data = dict(algebra=self.algebra, delta=self.delta, epsilon=self.epsilon,
                    antipode=self.antipode, involution=self.involution)
        data.update(kwargs)
        return WeakHopfData(**data)


@dataclass(frozen=True)
class CartanPair:
    """Images of the counital maps, decomposed into matrix blocks."""

    target: SubalgebraEmbedding
    source: SubalgebraEmbedding


@dataclass(frozen=True)
class HaarData:
    projection: AlgebraElement
    functional: np.ndarray  # phi(u_i) per basis unit


@dataclass(frozen=True)
class DualAlgebra:
    """Dual weak Hopf structure plus the evaluation pairing against the
    original basis: evaluation[j, i] = (j-th dual basis unit)(u_i)."""

    hopf: WeakHopfData
    evaluation: np.ndarray


def counital_maps(hopf: WeakHopfData, b: AlgebraElement):
    """Target and source counital images of a single element."""
    return (hopf.algebra.element(hopf.target_counital @ b.vec),
            hopf.algebra.element(hopf.source_counital @ b.vec))


# ---------------------------------------------------------------------------
# Axiom verification.
# ---------------------------------------------------------------------------


def _delta_product(hopf: WeakHopfData, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Pointwise product in B(x)B of two stacks of coproduct-style tensors.

    ``left`` and ``right`` have shape (n, d, d); returns (n, m, d, d) products
    of every pair via the matmul regrouping of the four-leg contraction.
    """
    mult = hopf.mult
    d = hopf.dim
    c1 = np.einsum("ipq,pPr->irPq", left, mult, optimize=True)
    c2 = np.einsum("jPQ,qQs->Pqjs", right, mult, optimize=True)
    n, m = left.shape[0], right.shape[0]
    prod = c1.reshape(n * d, d * d) @ c2.reshape(d * d, m * d)
    return prod.reshape(n, d, m, d).transpose(0, 2, 1, 3)


def verify_axioms(hopf: WeakHopfData, tol: float = DEFAULT_TOL, seed: int = 0) -> Report:
    """Residual check of every defining axiom; classifies the structure as a
    weak Kac algebra, a weak C*-Hopf algebra, or invalid."""
    rep = Report(tolerance=tol, seed=seed, title="weak Hopf axiom check")
    d = hopf.dim
    delta, eps, anti = hopf.delta, hopf.epsilon, hopf.antipode
    mult = hopf.mult
    eye = np.eye(d, dtype=complex)
    star = hopf.star_matrix

    lhs = np.einsum("ipc,pab->iabc", delta, delta, optimize=True)
    rhs = np.einsum("iaq,qbc->iabc", delta, delta, optimize=True)
    rep.add("coassociativity", rel_residual(lhs, rhs), ref="coalgebra")

    rep.add("counit left", rel_residual(np.einsum("ipq,p->iq", delta, eps), eye),
            ref="coalgebra")
    rep.add("counit right", rel_residual(np.einsum("ipq,q->ip", delta, eps), eye),
            ref="coalgebra")

    prod_delta = np.einsum("ijm,mpq->ijpq", mult, delta, optimize=True)
    pair_delta = _delta_product(hopf, delta, delta)
    rep.add("comultiplication multiplicative", rel_residual(prod_delta, pair_delta),
            ref="axiom (1)")

    lhs = np.einsum("ji,jpq->ipq", star, delta)
    rhs = np.einsum("iPQ,pP,qQ->ipq", np.conj(delta), star, star, optimize=True)
    rep.add("comultiplication star-preserving", rel_residual(lhs, rhs), ref="axiom (1)")

    et, es = hopf.target_counital, hopf.source_counital
    e1 = hopf.delta_unit
    eprod = hopf._eps_of_products

    lhs = np.einsum("kc,bkr->bcr", et, mult, optimize=True)
    rhs = np.einsum("bpq,pc->bcq", delta, eprod, optimize=True)
    rep.add("target counital relation", rel_residual(lhs, rhs), ref="axiom (2)")

    lhs = np.einsum("bpq,sq->bps", delta, et, optimize=True)
    rhs = np.einsum("pq,pbr->brq", e1, mult, optimize=True)
    rep.add("target counital coproduct", rel_residual(lhs, rhs), ref="axiom (2)")

    lhs = np.einsum("kc,kbr->cbr", es, mult, optimize=True)
    rhs = np.einsum("bpq,cq->cbp", delta, eprod, optimize=True)
    rep.add("source counital relation", rel_residual(lhs, rhs), ref="axiom (2')")

    lhs = np.einsum("bpq,sp->bsq", delta, es, optimize=True)
    rhs = np.einsum("pq,bqr->bpr", e1, mult, optimize=True)
    rep.add("source counital coproduct", rel_residual(lhs, rhs), ref="axiom (2')")

    ps = np.einsum("kq,pkr->pqr", anti, mult, optimize=True)
    rep.add("antipode target identity",
            rel_residual(np.einsum("bpq,pqr->br", delta, ps, optimize=True), et.T),
            ref="axiom (3)")
    sp = np.einsum("kp,kqr->pqr", anti, mult, optimize=True)
    rep.add("antipode source identity",
            rel_residual(np.einsum("bpq,pqr->br", delta, sp, optimize=True), es.T),
            ref="axiom (3')")

    lhs = np.einsum("ijm,km->ijk", mult, anti, optimize=True)
    rhs = np.einsum("aj,bi,abr->ijr", anti, anti, mult, optimize=True)
    rep.add("antipode anti-multiplicative", rel_residual(lhs, rhs), ref="axiom (3)")

    lhs = np.einsum("jb,jpq->bpq", anti, delta, optimize=True)
    rhs = np.einsum("bPQ,pQ,qP->bpq", delta, anti, anti, optimize=True)
    rep.add("antipode anti-comultiplicative", rel_residual(lhs, rhs), ref="axiom (3)")
    rep.add("counit antipode-invariant", rel_residual(eps @ anti, eps), ref="axiom (3)")

    antistar = anti @ star
    rep.add("star-antipode squared identity",
            rel_residual(antistar @ np.conj(antistar), eye), ref="axiom (3)")

    rep.add("involution squared identity",
            rel_residual(star @ np.conj(star), eye), ref="C* structure")
    lhs = np.einsum("km,ijm->ijk", star, np.conj(mult), optimize=True)
    rhs = np.einsum("aj,bi,abr->ijr", star, star, mult, optimize=True)
    rep.add("involution anti-multiplicative", rel_residual(lhs, rhs), ref="C* structure")
    rep.add("involution fixes unit", rel_residual(hopf.star(hopf.unit_vec),
                                                  hopf.unit_vec), ref="C* structure")

    core_pass = rep.passed
    kac_s2 = rel_residual(anti @ anti, eye)
    kac_comm = rel_residual(anti @ star, star @ np.conj(anti))
    rep.add_info("antipode involutive", kac_s2, ref="weak Kac",
                 note="classification only")
    rep.add_info("antipode commutes with star", kac_comm, ref="weak Kac",
                 note="classification only")

    if core_pass and kac_s2 <= tol and kac_comm <= tol:
        rep.classification = "weak Kac"
    elif core_pass:
        rep.classification = "weak C*-Hopf"
    else:
        rep.classification = "invalid"
    return rep


# ---------------------------------------------------------------------------
# Cartan subalgebras, integrals, duals, connectedness.
# ---------------------------------------------------------------------------


def cartan_subalgebras(hopf: WeakHopfData, tol: float = DEFAULT_TOL,
                       seed: int = 0) -> CartanPair:
    """Fixed-point subalgebras of the counital maps, block-decomposed.

    The decomposition uses the canonical block adjoint; both Cartan images
    are adjoint-stable for every structure handled here.
    """
    rng = np.random.default_rng(seed)
    d = hopf.dim
    target_span = null_space(hopf.target_counital - np.eye(d), 1e-10)
    source_span = null_space(hopf.source_counital - np.eye(d), 1e-10)
    target = subalgebra_from_basis(hopf.algebra, target_span, rng=rng, tol=tol)
    source = subalgebra_from_basis(hopf.algebra, source_span, rng=rng, tol=tol)

    comm = hopf.algebra.mul_vecs(target.images.T[:, None, :],
                                 source.images.T[None, :, :]) \
        - hopf.algebra.mul_vecs(source.images.T[None, :, :],
                                target.images.T[:, None, :])
    if max_abs(comm) > 100 * tol:
        raise InvariantViolation("Cartan subalgebras do not commute")
    mapped = hopf.antipode @ target.images
    if subspace_residual(mapped, source.images) > 1e-6:
        raise InvariantViolation("antipode does not exchange the Cartan subalgebras")
    return CartanPair(target, source)


def haar_projection(hopf: WeakHopfData, tol: float = DEFAULT_TOL) -> AlgebraElement:
    """Unique projection p with x p = eps_t(x) p, S(p) = p, eps_t(p) = 1."""
    d = hopf.dim
    mult = hopf.mult
    et = hopf.target_counital
    left_all = mult.transpose(0, 2, 1)  # left_all[i] = matrix of left mult by u_i
    et_left = np.einsum("ki,kab->iab", et, left_all, optimize=True)
    rows = [(left_all - et_left).reshape(d * d, d),
            hopf.antipode - np.eye(d),
            et]
    mat = np.vstack(rows)
    rhs = np.concatenate([np.zeros(d * d + d, dtype=complex), hopf.unit_vec])
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] <= 1e-9 * sv[0]:
        raise InvariantViolation("Haar projection system degenerate")
    if rel_residual(mat @ sol, rhs) > 100 * tol:
        raise InvariantViolation("Haar projection system degenerate")
    p = sol
    if rel_residual(hopf.algebra.mul_vecs(p, p), p) > 100 * tol \
            or rel_residual(hopf.star(p), p) > 100 * tol:
        raise InvariantViolation("Haar projection is not a self-adjoint idempotent")
    return hopf.algebra.element(p)


def haar_functional(hopf: WeakHopfData, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unique positive functional phi with (id(x)phi)Delta = (eps_t(x)phi)Delta,
    phi.S = phi and phi.eps_t = eps.  Returns the vector phi(u_i)."""
    d = hopf.dim
    delta, et = hopf.delta, hopf.target_counital
    inv_block = np.einsum("bpq,rp->brq", delta, np.eye(d) - et, optimize=True)
    mat = np.vstack([
        inv_block.reshape(d * d, d),
        hopf.antipode.T - np.eye(d),
        et.T,
    ])
    rhs = np.concatenate([np.zeros(d * d + d, dtype=complex), hopf.epsilon])
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] <= 1e-9 * sv[0]:
        raise InvariantViolation("Haar functional system degenerate")
    if rel_residual(mat @ sol, rhs) > 100 * tol:
        raise InvariantViolation("Haar functional system degenerate")
    gram = np.einsum("ai,ajk,k->ij", hopf.star_matrix, hopf.mult, sol, optimize=True)
    herm = rel_residual(gram, gram.conj().T)
    eigs = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    if herm > 1e-6 or eigs[0] < -1e-7 * max(eigs[-1], 1.0):
        raise InvariantViolation("Haar functional is not positive")
    return sol


def haar_traciality_residual(hopf: WeakHopfData, phi: np.ndarray) -> float:
    values = np.einsum("ijk,k->ij", hopf.mult, phi)
    return rel_residual(values, values.T)


def haar_data(hopf: WeakHopfData, tol: float = DEFAULT_TOL) -> HaarData:
    return HaarData(haar_projection(hopf, tol), haar_functional(hopf, tol))


def dual_algebra(hopf: WeakHopfData, tol: float = DEFAULT_TOL,
                 seed: int = 0) -> DualAlgebra:
    """Dual weak Hopf structure on the dual space, block-decomposed.

    Product is the transpose of the coproduct, coproduct the transpose of the
    product, unit the counit, counit evaluation at the unit, antipode the
    transpose, and involution phi* (b) = conj(phi(S(b)*)).
    """
    rng = np.random.default_rng(seed)
    d = hopf.dim
    mult_dual = hopf.delta.transpose(1, 2, 0)
    delta_dual = hopf.mult.transpose(2, 0, 1)
    unit_dual = hopf.epsilon.copy()
    eps_dual = hopf.unit_vec.copy()
    s_dual = hopf.antipode.T
    j_dual = (np.conj(hopf.star_matrix) @ hopf.antipode).T

    raw = StructureAlgebra(mult_dual, unit_dual, j_dual)
    multi, change = decompose_structure_algebra(raw, rng=rng, tol=tol)
    inv = np.linalg.inv(change)

    delta_new = np.einsum("iI,Pp,Qq,ipq->IPQ", change, inv, inv, delta_dual,
                          optimize=True)
    eps_new = eps_dual @ change
    s_new = inv @ s_dual @ change
    j_new = inv @ j_dual @ np.conj(change)

    canonical = canonical_involution_matrix(multi)
    involution = None if rel_residual(j_new, canonical) <= 1e-9 else j_new
    dual = WeakHopfData(multi, delta_new, eps_new, s_new, involution)
    return DualAlgebra(dual, change.T)


def double_dual_residual(hopf: WeakHopfData, tol: float = DEFAULT_TOL,
                         seed: int = 0) -> float:
    """Distance between the double dual and the original structure under the
    canonical evaluation identification."""
    first = dual_algebra(hopf, tol, seed)
    second = dual_algebra(first.hopf, tol, seed)
    dd = second.hopf
    # evaluation-at-u_i in double-dual coordinates: sum_m c[m,i] v_m(w_j) = w_j(u_i)
    coords = np.linalg.solve(second.evaluation.T, first.evaluation)
    res = rel_residual(
        np.einsum("mi,mPQ->iPQ", coords, dd.delta, optimize=True),
        np.einsum("ipq,Pp,Qq->iPQ", hopf.delta, coords, coords, optimize=True))
    res = max(res, rel_residual(
        np.einsum("ijk,mk->ijm", hopf.mult, coords, optimize=True),
        np.einsum("pi,qj,pqm->ijm", coords, coords, dd.mult, optimize=True)))
    res = max(res, rel_residual(dd.epsilon @ coords, hopf.epsilon))
    res = max(res, rel_residual(dd.antipode @ coords, coords @ hopf.antipode))
    res = max(res, rel_residual(dd.star_matrix @ np.conj(coords),
                                coords @ hopf.star_matrix))
    return res


def _center_span_of(algebra: MultiMatrixAlgebra) -> np.ndarray:
    return np.column_stack([algebra.block_identity(a).vec
                            for a in range(len(algebra.blocks))])


def connectedness(hopf: WeakHopfData, tol: float = DEFAULT_TOL, seed: int = 0):
    """(connected, dual_connected, biconnected) with the cross-check that the
    two available criteria for dual connectedness agree."""
    pair = cartan_subalgebras(hopf, tol, seed)
    connected = intersection_dim(pair.target.images, _center_span_of(hopf.algebra)) == 1
    primal_criterion = intersection_dim(pair.target.images, pair.source.images) == 1

    dual = dual_algebra(hopf, tol, seed)
    dual_pair = cartan_subalgebras(dual.hopf, tol, seed)
    dual_connected = intersection_dim(dual_pair.target.images,
                                      _center_span_of(dual.hopf.algebra)) == 1
    if dual_connected != primal_criterion:
        raise InvariantViolation(
            "connectedness criteria disagree between dual and primal")
    return connected, dual_connected, connected and dual_connected


# ---------------------------------------------------------------------------
# Example generators.
# ---------------------------------------------------------------------------


def pair_groupoid(n: int) -> WeakHopfData:
    """Groupoid algebra of the pair groupoid on n points: M_n with grouplike
    matrix units."""
    if n < 1:
        raise InvariantViolation("pair groupoid needs at least one point")
    algebra = MultiMatrixAlgebra([n])
    d = algebra.dim
    delta = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        delta[i, i, i] = 1.0
    eps = np.ones(d, dtype=complex)
    anti = np.zeros((d, d), dtype=complex)
    for k in range(n):
        for l in range(n):
            anti[algebra.basis_index(0, l, k), algebra.basis_index(0, k, l)] = 1.0
    return WeakHopfData(algebra, delta, eps, anti)


def group_algebra(group: FiniteGroup, tol: float = DEFAULT_TOL,
                  seed: int = 0) -> WeakHopfData:
    """Group algebra with Delta(g) = g (x) g, realized on its matrix blocks
    via the left regular representation."""
    rng = np.random.default_rng(seed)
    n = group.order
    ambient = MultiMatrixAlgebra([n])
    perms = np.zeros((n, ambient.dim), dtype=complex)
    for g in range(n):
        mat = np.zeros((n, n), dtype=complex)
        mat[group.table[g, :], np.arange(n)] = 1.0
        perms[g] = mat.reshape(-1)
    emb = subalgebra_from_basis(ambient, perms.T, rng=rng, tol=tol)
    if emb.sub.dim != n:
        raise InvariantViolation("regular representation span has wrong dimension")

    # coordinates of the new matrix units in the group basis and back
    from_units, *_ = np.linalg.lstsq(perms.T, emb.images, rcond=None)
    if rel_residual(perms.T @ from_units, emb.images) > 1e-8:
        raise InvariantViolation("matrix units do not lie in the group span")
    to_units = np.linalg.inv(from_units)

    delta = np.einsum("ij,pi,qi->jpq", from_units, to_units, to_units, optimize=True)
    eps = from_units.sum(axis=0)
    s_group = np.zeros((n, n), dtype=complex)
    s_group[group.inverse, np.arange(n)] = 1.0
    antipode = to_units @ s_group @ from_units

    j_group = s_group  # (sum c_g g)* = sum conj(c_g) g^{-1}
    j_new = to_units @ j_group @ np.conj(from_units)
    canonical = canonical_involution_matrix(emb.sub)
    involution = None if rel_residual(j_new, canonical) <= 1e-9 else j_new
    hopf = WeakHopfData(emb.sub, delta, eps, antipode, involution)
    hopf.group_basis = to_units  # column g = that group element in unit coords
    return hopf


def function_algebra(group: FiniteGroup) -> WeakHopfData:
    """Functions on a finite group: commutative, with coproduct dual to the
    group law."""
    n = group.order
    algebra = MultiMatrixAlgebra([1] * n)
    delta = np.zeros((n, n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            delta[group.table[a, b], a, b] = 1.0
    eps = np.zeros(n, dtype=complex)
    eps[group.identity] = 1.0
    anti = np.zeros((n, n), dtype=complex)
    anti[group.inverse, np.arange(n)] = 1.0
    return WeakHopfData(algebra, delta, eps, anti)
