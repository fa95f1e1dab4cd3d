"""Finite-dimensional C*-algebra engine.

A multimatrix algebra is a direct sum of full complex matrix blocks.  Elements
are kept as flat coefficient vectors over the canonical matrix-unit basis, so
linear maps between algebras are ordinary matrices and batched element
arithmetic reduces to block einsums.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._linalg import (
    cluster_values,
    condition_number,
    max_abs,
    null_space,
    orthonormal_columns,
    rel_residual,
    residual_outside,
)
from .errors import InvariantViolation

DEFAULT_TOL = 1e-9


class MultiMatrixAlgebra:
    """Direct sum of full matrix blocks ``M_{m_1} + ... + M_{m_r}``.

    The canonical basis consists of the matrix units of each block; an element
    is a complex vector of length ``sum(m_a**2)`` holding the coefficients in
    row-major order block by block.
    """

    def __init__(self, blocks):
        blocks = tuple(int(m) for m in blocks)
        if not blocks or any(m < 1 for m in blocks):
            raise InvariantViolation("block sizes must be positive integers")
        self.blocks = blocks
        self.dim = int(sum(m * m for m in blocks))
        self._offsets = np.cumsum([0] + [m * m for m in blocks])

    def __repr__(self):
        return f"MultiMatrixAlgebra(blocks={list(self.blocks)})"

    def __eq__(self, other):
        return isinstance(other, MultiMatrixAlgebra) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    # -- basis bookkeeping -------------------------------------------------

    def block_slice(self, alpha: int) -> slice:
        return slice(int(self._offsets[alpha]), int(self._offsets[alpha + 1]))

    def basis_index(self, alpha: int, row: int, col: int) -> int:
        m = self.blocks[alpha]
        return int(self._offsets[alpha]) + row * m + col

    def basis_labels(self) -> list[tuple[int, int, int]]:
        return [(alpha, k, l)
                for alpha, m in enumerate(self.blocks)
                for k in range(m) for l in range(m)]

    def block_views(self, vecs: np.ndarray) -> list[np.ndarray]:
        """Reshape the trailing axis of ``vecs`` into per-block matrices."""
        vecs = np.asarray(vecs, dtype=complex)
        views = []
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            views.append(vecs[..., sl].reshape(vecs.shape[:-1] + (m, m)))
        return views

    # -- elements ----------------------------------------------------------

    def element(self, vec) -> "AlgebraElement":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.shape[0] != self.dim:
            raise InvariantViolation(
                f"coefficient vector has length {vec.shape[0]}, expected {self.dim}")
        return AlgebraElement(self, vec)

    def from_blocks(self, mats) -> "AlgebraElement":
        vec = np.zeros(self.dim, dtype=complex)
        for alpha, mat in enumerate(mats):
            mat = np.asarray(mat, dtype=complex)
            m = self.blocks[alpha]
            if mat.shape != (m, m):
                raise InvariantViolation(f"block {alpha} must be {m}x{m}")
            vec[self.block_slice(alpha)] = mat.reshape(-1)
        return AlgebraElement(self, vec)

    def unit(self) -> "AlgebraElement":
        return self.from_blocks([np.eye(m) for m in self.blocks])

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.dim, dtype=complex))

    def basis_unit(self, alpha: int, row: int, col: int) -> "AlgebraElement":
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.basis_index(alpha, row, col)] = 1.0
        return AlgebraElement(self, vec)

    def block_identity(self, alpha: int) -> "AlgebraElement":
        vec = np.zeros(self.dim, dtype=complex)
        for k in range(self.blocks[alpha]):
            vec[self.basis_index(alpha, k, k)] = 1.0
        return AlgebraElement(self, vec)

    # -- batched arithmetic on coefficient arrays --------------------------

    def mul_vecs(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Product of (broadcast) stacks of coefficient vectors."""
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        shape = np.broadcast_shapes(u.shape[:-1], v.shape[:-1])
        out = np.empty(shape + (self.dim,), dtype=complex)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            ub = u[..., sl].reshape(u.shape[:-1] + (m, m))
            vb = v[..., sl].reshape(v.shape[:-1] + (m, m))
            prod = ub @ vb
            out[..., sl] = prod.reshape(shape + (m * m,))
        return out

    def pairwise_mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """All-pairs products of two stacks of coefficient vectors.

        ``u`` is (a, dim), ``v`` is (b, dim); returns (a, b, dim) with one
        matrix multiply per block.
        """
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        a, b = u.shape[0], v.shape[0]
        out = np.empty((a, b, self.dim), dtype=complex)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            ub = u[:, sl].reshape(a * m, m)
            vb = v[:, sl].reshape(b, m, m).transpose(1, 0, 2).reshape(m, b * m)
            prod = (ub @ vb).reshape(a, m, b, m).transpose(0, 2, 1, 3)
            out[:, :, sl] = prod.reshape(a, b, m * m)
        return out

    def contract_mul(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """sum_r p[s, r] * q[r, t] for stacks p: (s, r, dim), q: (r, t, dim).

        One matrix multiply per block over the fused (r, matrix-col) index.
        """
        p = np.asarray(p, dtype=complex)
        q = np.asarray(q, dtype=complex)
        s, r = p.shape[0], p.shape[1]
        t = q.shape[1]
        out = np.empty((s, t, self.dim), dtype=complex)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            pb = p[:, :, sl].reshape(s, r, m, m).transpose(0, 2, 1, 3).reshape(s * m, r * m)
            qb = q[:, :, sl].reshape(r, t, m, m).transpose(0, 2, 1, 3).reshape(r * m, t * m)
            prod = (pb @ qb).reshape(s, m, t, m).transpose(0, 2, 1, 3)
            out[:, :, sl] = prod.reshape(s, t, m * m)
        return out

    def adjoint_vecs(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        out = np.empty_like(u)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            ub = u[..., sl].reshape(u.shape[:-1] + (m, m))
            adj = np.conj(np.swapaxes(ub, -1, -2))
            out[..., sl] = adj.reshape(u.shape[:-1] + (m * m,))
        return out

    def left_mult_matrix(self, vec: np.ndarray) -> np.ndarray:
        """Matrix of x -> vec * x on coefficient vectors."""
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            a = np.asarray(vec, dtype=complex)[sl].reshape(m, m)
            mat[sl, sl] = np.kron(a, np.eye(m))
        return mat

    def right_mult_matrix(self, vec: np.ndarray) -> np.ndarray:
        """Matrix of x -> x * vec on coefficient vectors."""
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for alpha, m in enumerate(self.blocks):
            sl = self.block_slice(alpha)
            a = np.asarray(vec, dtype=complex)[sl].reshape(m, m)
            mat[sl, sl] = np.kron(np.eye(m), a.T)
        return mat

    @cached_property
    def mult_tensor(self) -> np.ndarray:
        """Structure constants c[i, j, k] with u_i u_j = sum_k c[i,j,k] u_k.

        Materialized lazily; only meant for small algebras.
        """
        eye = np.eye(self.dim, dtype=complex)
        return self.mul_vecs(eye[:, None, :], eye[None, :, :])

    # -- spectral helpers (canonical adjoint) -------------------------------

    def hermitian_residual(self, vec: np.ndarray) -> float:
        return rel_residual(vec, self.adjoint_vecs(vec))

    def eigh_blocks(self, vec: np.ndarray):
        return [np.linalg.eigh(mat) for mat in self.block_views(vec)]

    def apply_spectral(self, vec: np.ndarray, fun) -> np.ndarray:
        parts = []
        for vals, vecs in self.eigh_blocks(vec):
            parts.append((vecs * fun(vals)) @ vecs.conj().T)
        return self.from_blocks(parts).vec

    def positive_residual(self, vec: np.ndarray) -> float:
        """Distance from being a positive semi-definite element (relative)."""
        herm = self.hermitian_residual(vec)
        worst = 0.0
        for vals, _ in self.eigh_blocks(vec):
            if vals.size:
                worst = max(worst, float(-np.min(vals)))
        return max(herm, worst / max(max_abs(vec), 1.0))

    def inverse_vec(self, vec: np.ndarray) -> np.ndarray:
        return self.from_blocks(
            [np.linalg.inv(mat) for mat in self.block_views(vec)]).vec

    def sqrt_posdef_vec(self, vec: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        scale = max(max_abs(vec), 1.0)
        for vals, _ in self.eigh_blocks(vec):
            if np.min(vals) <= tol * scale:
                raise InvariantViolation("element is not positive definite")
        return self.apply_spectral(vec, np.sqrt)


@dataclass(frozen=True)
class AlgebraElement:
    """Element of a multimatrix algebra, stored as a coefficient vector."""

    algebra: MultiMatrixAlgebra
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=complex).reshape(-1))

    def blocks(self) -> list[np.ndarray]:
        return self.algebra.block_views(self.vec)

    def __add__(self, other):
        return AlgebraElement(self.algebra, self.vec + other.vec)

    def __sub__(self, other):
        return AlgebraElement(self.algebra, self.vec - other.vec)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return AlgebraElement(self.algebra, self.algebra.mul_vecs(self.vec, other.vec))
        return AlgebraElement(self.algebra, self.vec * complex(other))

    def __rmul__(self, scalar):
        return AlgebraElement(self.algebra, complex(scalar) * self.vec)

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.vec)

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.algebra.adjoint_vecs(self.vec))

    @property
    def H(self) -> "AlgebraElement":
        return self.adjoint()

    def norm(self) -> float:
        return max_abs(self.vec)

    def inverse(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.algebra.inverse_vec(self.vec))


class TraceState:
    """Positive trace on a multimatrix algebra, one weight per block."""

    def __init__(self, algebra: MultiMatrixAlgebra, weights):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != len(algebra.blocks):
            raise InvariantViolation("one trace weight per block required")
        if np.any(w <= 0):
            raise InvariantViolation("degenerate trace")
        self.algebra = algebra
        self.weights = w

    def __repr__(self):
        return f"TraceState({list(self.algebra.blocks)}, weights={self.weights.tolist()})"

    @classmethod
    def normalized_uniform(cls, algebra: MultiMatrixAlgebra) -> "TraceState":
        m = np.asarray(algebra.blocks, dtype=float)
        return cls(algebra, np.full(len(algebra.blocks), 1.0 / float(np.sum(m))))

    @property
    def normalized(self) -> bool:
        return abs(float(np.dot(self.weights, self.algebra.blocks)) - 1.0) <= 1e-9

    @cached_property
    def coefficient_weights(self) -> np.ndarray:
        """Vector t with tau(x) = t . x on coefficient vectors."""
        w = np.zeros(self.algebra.dim)
        for alpha, m in enumerate(self.algebra.blocks):
            for k in range(m):
                w[self.algebra.basis_index(alpha, k, k)] = self.weights[alpha]
        return w

    @cached_property
    def metric_weights(self) -> np.ndarray:
        """Diagonal of the sesquilinear form <x,y> = tau(x* y) on coefficients."""
        w = np.zeros(self.algebra.dim)
        for alpha in range(len(self.algebra.blocks)):
            w[self.algebra.block_slice(alpha)] = self.weights[alpha]
        return w

    def value(self, x) -> complex:
        vec = x.vec if isinstance(x, AlgebraElement) else np.asarray(x, dtype=complex)
        return complex(np.tensordot(vec, self.coefficient_weights, axes=([-1], [0])))

    def values(self, vecs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(vecs, dtype=complex),
                            self.coefficient_weights, axes=([-1], [0]))

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.sum(np.conj(u) * self.metric_weights * v))


class SubalgebraEmbedding:
    """Unital *-homomorphism of one multimatrix algebra into another.

    ``images`` has shape (ambient.dim, sub.dim); column j is the image of the
    j-th canonical basis unit of the subalgebra.
    """

    def __init__(self, sub: MultiMatrixAlgebra, ambient: MultiMatrixAlgebra,
                 images: np.ndarray):
        self.sub = sub
        self.ambient = ambient
        images = np.asarray(images, dtype=complex)
        if images.shape != (ambient.dim, sub.dim):
            raise InvariantViolation("embedding image matrix has wrong shape")
        self.images = images

    @classmethod
    def identity(cls, algebra: MultiMatrixAlgebra) -> "SubalgebraEmbedding":
        return cls(algebra, algebra, np.eye(algebra.dim, dtype=complex))

    def __repr__(self):
        return (f"SubalgebraEmbedding({list(self.sub.blocks)} into "
                f"{list(self.ambient.blocks)})")

    def embed_vec(self, coords: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=complex), self.images,
                            axes=([-1], [1]))

    def embed(self, x: AlgebraElement) -> AlgebraElement:
        return self.ambient.element(self.embed_vec(x.vec))

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.images, rcond=1e-12)

    def coords_vec(self, ambient_vecs: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Coordinates of ambient vectors in the sub basis (must lie in the image)."""
        coords = np.tensordot(np.asarray(ambient_vecs, dtype=complex), self._pinv,
                              axes=([-1], [1]))
        back = self.embed_vec(coords)
        if rel_residual(back, ambient_vecs) > 1e-6:
            raise InvariantViolation("vector does not lie in the subalgebra image")
        return coords

    def compose(self, outer: "SubalgebraEmbedding") -> "SubalgebraEmbedding":
        """Embedding of ``self.sub`` into ``outer.ambient`` (outer after self)."""
        if outer.sub != self.ambient:
            raise InvariantViolation("embeddings do not compose")
        return SubalgebraEmbedding(self.sub, outer.ambient, outer.images @ self.images)

    def restrict_to(self, other: "SubalgebraEmbedding",
                    tol: float = DEFAULT_TOL) -> "SubalgebraEmbedding":
        """Re-express this subalgebra as a subalgebra of ``other`` (same ambient)."""
        coords = other.coords_vec(self.images.T, tol)
        return SubalgebraEmbedding(self.sub, other.sub, coords.T)

    def verify(self, tol: float = DEFAULT_TOL) -> float:
        """Residual over the unit, multiplicativity and adjoint requirements.

        Multiplicativity over all unit pairs reduces to three checks on the
        first-column partial isometries w_j = image(f_j0): their mutual grams
        w_j* w_k = [j=k] image(f_00), the reconstruction of every image as
        w_j w_l*, and absorption of f_00 into the w_l*.  Together with the
        ambient's associativity this implies the full product table.
        """
        img = self.images.T  # (sub.dim, ambient.dim)
        eye = np.eye(self.sub.dim, dtype=complex)
        res = rel_residual(self.embed_vec(self.sub.unit().vec), self.ambient.unit().vec)
        adj = self.ambient.adjoint_vecs(img)
        sub_adj = self.sub.adjoint_vecs(eye)
        res = max(res, rel_residual(sub_adj @ img, adj))

        sub = self.sub
        cols, labels = [], []
        for alpha, m in enumerate(sub.blocks):
            for j in range(m):
                cols.append(sub.basis_index(alpha, j, 0))
                labels.append((alpha, j))
        w = img[cols]
        w_star = self.ambient.adjoint_vecs(w)

        grams = self.ambient.pairwise_mul(w_star, w)
        expected = np.zeros_like(grams)
        for a, (alpha, j) in enumerate(labels):
            for b, (beta, k) in enumerate(labels):
                if alpha == beta and j == k:
                    expected[a, b] = img[sub.basis_index(alpha, 0, 0)]
        res = max(res, rel_residual(grams, expected))

        outer = self.ambient.pairwise_mul(w, w_star)
        expected = np.zeros_like(outer)
        for a, (alpha, j) in enumerate(labels):
            for b, (beta, l) in enumerate(labels):
                if alpha == beta:
                    expected[a, b] = img[sub.basis_index(alpha, j, l)]
        res = max(res, rel_residual(outer, expected))

        corners = np.stack([img[sub.basis_index(alpha, 0, 0)]
                            for (alpha, _) in labels])
        absorbed = self.ambient.mul_vecs(corners, w_star)
        res = max(res, rel_residual(absorbed, w_star))
        return res

    def require_valid(self, tol: float = DEFAULT_TOL):
        if self.verify(tol) > 100 * tol:
            raise InvariantViolation("not a subalgebra")


@dataclass(frozen=True)
class InclusionMatrix:
    """Multiplicity matrix of a unital inclusion; rows index sub blocks,
    columns index ambient blocks."""

    entries: np.ndarray
    sub_blocks: tuple
    ambient_blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=int))

    @property
    def product_with_transpose(self) -> np.ndarray:
        lam = self.entries.astype(float)
        return lam @ lam.T


@dataclass(frozen=True)
class JonesExtension:
    """Result of the basic construction for an inclusion with a Markov trace."""

    algebra: MultiMatrixAlgebra
    e: AlgebraElement
    extended_trace: TraceState
    lam: float
    inclusion: SubalgebraEmbedding      # old ambient into the new algebra
    sub_projection: SubalgebraEmbedding  # original subalgebra into the new algebra
    realization: SubalgebraEmbedding     # new algebra inside operators on the GNS space


class ConditionalExpectation:
    """Trace-orthogonal projection onto the image of a subalgebra.

    Coincides with the unique trace-preserving conditional expectation in
    finite dimensions.
    """

    def __init__(self, sub: SubalgebraEmbedding, trace: TraceState,
                 tol: float = DEFAULT_TOL, verify: bool = True):
        if trace.algebra != sub.ambient:
            raise InvariantViolation("trace lives on a different algebra")
        if verify:
            sub.require_valid(tol)
        self.sub = sub
        self.trace = trace
        v = sub.images
        weighted = v * trace.metric_weights[:, None]
        gram = v.conj().T @ weighted
        if condition_number(gram) > 1e12:
            raise InvariantViolation("degenerate trace")
        self.matrix = v @ np.linalg.solve(gram, weighted.conj().T)

    def apply_vec(self, vecs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(vecs, dtype=complex), self.matrix,
                            axes=([-1], [1]))

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return self.sub.ambient.element(self.apply_vec(x.vec))


def conditional_expectation(sub: SubalgebraEmbedding, trace: TraceState,
                            x: AlgebraElement, tol: float = DEFAULT_TOL) -> AlgebraElement:
    """Trace-preserving conditional expectation of ``x`` onto the subalgebra."""
    return ConditionalExpectation(sub, trace, tol)(x)


# ---------------------------------------------------------------------------
# Subalgebra recognition: turn a *-closed subspace into matrix units.
# ---------------------------------------------------------------------------


class _RetryDecomposition(Exception):
    pass


def _spectral_projections(algebra, vec, gap_tol=1e-6):
    """Spectral projections of a self-adjoint element, one per cluster of
    eigenvalues pooled across all blocks.  Returns (values, projections)."""
    per_block = algebra.eigh_blocks(vec)
    all_vals = np.concatenate([vals for vals, _ in per_block])
    scale = max(max_abs(all_vals), 1.0)
    clusters = cluster_values(all_vals, gap_tol * scale)
    reps, projections = [], []
    for cluster in clusters:
        members = set(cluster.tolist())
        mats, pos = [], 0
        for (vals, vecs), m in zip(per_block, algebra.blocks):
            take = [i for i in range(m) if pos + i in members]
            pos += m
            if take:
                sel = vecs[:, take]
                mats.append(sel @ sel.conj().T)
            else:
                mats.append(np.zeros((m, m), dtype=complex))
        reps.append(float(np.mean(all_vals[cluster])))
        projections.append(algebra.from_blocks(mats).vec)
    return np.asarray(reps), projections


def _random_self_adjoint(algebra, span, rng):
    k = span.shape[1]
    coeff = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    x = span @ coeff
    return 0.5 * (x + algebra.adjoint_vecs(x))


def _commutant_in_span(ambient, span, generators, tol):
    """Vectors in the column span commuting with each generator."""
    rows = [
        (ambient.left_mult_matrix(g) - ambient.right_mult_matrix(g)) @ span
        for g in generators
    ]
    return span @ null_space(np.vstack(rows), tol)


def _center_of_span(ambient, span, rng, tol):
    """Center of a *-closed subalgebra span.

    Uses a few random elements as generators (the commutant of a generating
    set equals the commutant of the algebra) and verifies against the full
    span afterwards, enlarging the generator set if needed.
    """
    dim = span.shape[1]
    n_gen = min(dim, 3)
    gens = [span @ (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
            for _ in range(n_gen)]
    basis = span.T
    for _ in range(6):
        cand = _commutant_in_span(ambient, span, gens, tol)
        comm = ambient.mul_vecs(cand.T[:, None, :], basis[None, :, :]) \
            - ambient.mul_vecs(basis[None, :, :], cand.T[:, None, :])
        worst = max_abs(comm) / max(max_abs(cand), 1.0)
        if worst <= 100 * tol:
            return cand
        j = int(np.argmax(np.abs(comm).reshape(cand.shape[1], dim, -1)
                          .max(axis=(0, 2))))
        gens.append(span[:, j])
    raise InvariantViolation("center computation did not stabilize")


def subalgebra_from_basis(ambient: MultiMatrixAlgebra, span: np.ndarray, *,
                          rng=None, tol: float = DEFAULT_TOL) -> SubalgebraEmbedding:
    """Recognize a *-closed unital subspace of ``ambient`` as a multimatrix
    algebra and return the embedding carrying its canonical matrix units.

    Blocks are split with spectral projections of a random self-adjoint
    element of the center (retried on unlucky draws, deterministic for a fixed
    seed, blocks ordered by the sorted eigenvalues of the splitting element);
    within a block, minimal projections come from a random self-adjoint corner
    element and the partial isometries are normalized corner products.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    span = orthonormal_columns(np.asarray(span, dtype=complex), 1e-10)
    dim = span.shape[1]
    if dim == 0:
        raise InvariantViolation("empty subspace")
    if dim == ambient.dim:
        return SubalgebraEmbedding.identity(ambient)

    _check_closure(ambient, span, rng, tol)
    center_span = _center_of_span(ambient, span, rng, tol)

    for _ in range(8):
        try:
            units, sizes = _split_into_matrix_units(ambient, span, center_span, rng)
            break
        except _RetryDecomposition:
            continue
    else:
        raise InvariantViolation("failed to split subalgebra into matrix blocks")

    sub = MultiMatrixAlgebra(sizes)
    emb = SubalgebraEmbedding(sub, ambient, np.column_stack(units))
    emb.require_valid(tol)
    return emb


def _check_closure(ambient, span, rng, tol):
    """Adjoint and unit closure in full; product closure on random pairs.

    Full multiplicativity is re-verified on the constructed matrix units, so
    the sampled check here only serves to fail early with a clear message.
    """
    dim = span.shape[1]
    basis = span.T
    if residual_outside(ambient.adjoint_vecs(basis).T, span) > 100 * tol:
        raise InvariantViolation("not a subalgebra")
    if residual_outside(ambient.unit().vec[:, None], span) > 100 * tol:
        raise InvariantViolation("subspace does not contain the unit")
    samples = min(dim * dim, 4 * dim + 16)
    left = basis[rng.integers(0, dim, samples)]
    right = basis[rng.integers(0, dim, samples)]
    prods = ambient.mul_vecs(left, right)
    if residual_outside(prods.T, span) > 100 * tol:
        raise InvariantViolation("not a subalgebra")


def _split_into_matrix_units(ambient, span, center_span, rng):
    z = _random_self_adjoint(ambient, center_span, rng)
    _, projs = _spectral_projections(ambient, z)
    central = [p for p in projs
               if residual_outside(p[:, None], center_span) < 1e-6]
    if len(central) != len(projs):
        raise _RetryDecomposition
    if rel_residual(np.sum(central, axis=0), ambient.unit().vec) > 1e-6:
        raise _RetryDecomposition

    units: list[np.ndarray] = []
    sizes: list[int] = []
    for p in central:
        corner = ambient.mul_vecs(p, ambient.mul_vecs(span.T, p))
        corner = orthonormal_columns(corner.T, 1e-8)
        msq = corner.shape[1]
        m = int(round(np.sqrt(msq)))
        if m * m != msq:
            raise _RetryDecomposition
        diag = _minimal_projections(ambient, corner, p, m, rng)
        units.extend(_matrix_units_from_projections(ambient, span, diag, rng))
        sizes.append(m)
    return units, sizes


def _minimal_projections(ambient, corner, p, m, rng):
    if m == 1:
        return [p]
    h = _random_self_adjoint(ambient, corner, rng)
    vals, projs = _spectral_projections(ambient, h)
    scale = max(max_abs(vals), 1.0)
    keep = [q for v, q in zip(vals, projs) if abs(v) > 1e-6 * scale]
    if len(keep) != m:
        raise _RetryDecomposition
    if rel_residual(np.sum(keep, axis=0), p) > 1e-6:
        raise _RetryDecomposition
    return keep


def _matrix_units_from_projections(ambient, span, diag, rng):
    m = len(diag)
    if m == 1:
        return [diag[0]]
    isometries = [diag[0]]
    for k in range(1, m):
        for _ in range(8):
            y = span @ (rng.standard_normal(span.shape[1])
                        + 1j * rng.standard_normal(span.shape[1]))
            u = ambient.mul_vecs(diag[k], ambient.mul_vecs(y, diag[0]))
            gram = ambient.mul_vecs(ambient.adjoint_vecs(u), u)
            c = float(np.real(np.vdot(diag[0], gram) / np.vdot(diag[0], diag[0])))
            if c > 1e-10 and rel_residual(gram, c * diag[0]) < 1e-6:
                isometries.append(u / np.sqrt(c))
                break
        else:
            raise _RetryDecomposition
    units = []
    for j in range(m):
        for l in range(m):
            units.append(ambient.mul_vecs(isometries[j],
                                          ambient.adjoint_vecs(isometries[l])))
    return units


# ---------------------------------------------------------------------------
# Commutants, centers, inclusion data, Markov traces.
# ---------------------------------------------------------------------------


def relative_commutant(sub: SubalgebraEmbedding,
                       within: SubalgebraEmbedding | None = None, *,
                       rng=None, tol: float = DEFAULT_TOL) -> SubalgebraEmbedding:
    """Elements of ``within`` (default: the ambient) commuting with the image
    of ``sub``, block-decomposed and embedded in the same ambient."""
    ambient = sub.ambient
    if within is None:
        carrier = np.eye(ambient.dim, dtype=complex)
    else:
        if within.ambient != ambient:
            raise InvariantViolation("subalgebras live in different ambients")
        carrier = within.images
    span = _commutant_in_span(ambient, carrier,
                              [sub.images[:, j] for j in range(sub.sub.dim)], tol)
    return subalgebra_from_basis(ambient, span, rng=rng, tol=tol)


def center(emb: SubalgebraEmbedding, *, rng=None,
           tol: float = DEFAULT_TOL) -> SubalgebraEmbedding:
    """Center of a (sub)algebra, as a subalgebra of the same ambient."""
    return relative_commutant(emb, within=emb, rng=rng, tol=tol)


def inclusion_matrix(sub: SubalgebraEmbedding, tol: float = DEFAULT_TOL) -> InclusionMatrix:
    """Multiplicities of each sub block inside each ambient block."""
    unit_res = rel_residual(sub.embed_vec(sub.sub.unit().vec), sub.ambient.unit().vec)
    if unit_res > 100 * tol:
        raise InvariantViolation("embedding is not unital")
    rows = []
    for alpha, m in enumerate(sub.sub.blocks):
        p = sub.embed_vec(sub.sub.block_identity(alpha).vec)
        row = []
        for mat in sub.ambient.block_views(p):
            mult = float(np.real(np.trace(mat))) / m
            if abs(mult - round(mult)) > 1e-6:
                raise InvariantViolation("non-integer inclusion multiplicity")
            row.append(int(round(mult)))
        rows.append(row)
    entries = np.asarray(rows, dtype=int)
    expected = entries.T @ np.asarray(sub.sub.blocks)
    if not np.array_equal(expected, np.asarray(sub.ambient.blocks)):
        raise InvariantViolation("embedding is not unital")
    return InclusionMatrix(entries, sub.sub.blocks, sub.ambient.blocks)


def markov_trace(lam_matrix: InclusionMatrix, tol: float = DEFAULT_TOL):
    """Perron-Frobenius data of a connected inclusion.

    Returns ``(index, trace_vector)`` where the vector is indexed by the sub
    blocks and normalized so the induced trace is a state on the subalgebra.
    """
    m = lam_matrix.product_with_transpose
    n = m.shape[0]
    reach = (m > 0).astype(bool) | np.eye(n, dtype=bool)
    closure = np.linalg.matrix_power(reach.astype(float), max(n - 1, 1))
    if np.any(closure == 0):
        raise InvariantViolation("inclusion not connected")
    vals, vecs = np.linalg.eigh(m)
    index = float(vals[-1])
    vector = np.real(vecs[:, -1])
    if vector[int(np.argmax(np.abs(vector)))] < 0:
        vector = -vector
    if np.any(vector <= 0):
        raise InvariantViolation("Perron-Frobenius vector not strictly positive")
    vector = vector / float(vector @ np.asarray(lam_matrix.sub_blocks))
    if rel_residual(m @ vector, index * vector) > tol:
        raise InvariantViolation("eigen-residual above tolerance")
    return index, vector


def watatani_index(trace: TraceState) -> AlgebraElement:
    """Central element sum_a (m_a / tau_a) 1_a attached to a faithful trace."""
    alg = trace.algebra
    out = alg.zero().vec.copy()
    for alpha, m in enumerate(alg.blocks):
        out += (m / trace.weights[alpha]) * alg.block_identity(alpha).vec
    return alg.element(out)


# ---------------------------------------------------------------------------
# Basic construction.
# ---------------------------------------------------------------------------


def basic_construction(sub: SubalgebraEmbedding, trace: TraceState, lam: float,
                       *, rng=None, tol: float = DEFAULT_TOL) -> JonesExtension:
    """Jones basic construction for ``sub`` inside its ambient, for a Markov
    trace of modulus ``lam``.

    The extension is realized on the trace-GNS space of the ambient algebra:
    left multiplications together with the orthogonal projection onto the GNS
    closure of the subalgebra generate the new algebra, whose span is closed
    under products until the dimension stabilizes.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    ambient = sub.ambient
    if trace.algebra != ambient:
        raise InvariantViolation("trace lives on a different algebra")
    lam_mat = inclusion_matrix(sub, tol)
    ent = lam_mat.entries.astype(float)
    if rel_residual(ent.T @ (ent @ trace.weights), trace.weights / lam) > 1e-8:
        raise InvariantViolation("trace not Markov")

    n = ambient.dim
    gns = MultiMatrixAlgebra([n])
    root = np.sqrt(trace.metric_weights)
    inv_root = 1.0 / root

    def as_operator(mat: np.ndarray) -> np.ndarray:
        # conjugate into the orthonormal GNS coordinates
        return (root[:, None] * mat * inv_root[None, :]).reshape(-1)

    eye = np.eye(n, dtype=complex)
    left_ops = np.stack([as_operator(ambient.left_mult_matrix(eye[j]))
                         for j in range(n)])

    w = sub.images * root[:, None]
    q = orthonormal_columns(w, 1e-10)
    e_vec = (q @ q.conj().T).reshape(-1)

    # words in the generators collapse quickly: seed with D, e and D e D
    pairs = gns.mul_vecs(left_ops[:, None, :],
                         gns.mul_vecs(e_vec, left_ops[None, :, :]))
    candidates = np.vstack([left_ops, e_vec[None, :], pairs.reshape(-1, gns.dim)])
    span = orthonormal_columns(candidates.T, 1e-10)
    generators = np.vstack([left_ops, e_vec[None, :]])
    for _ in range(n + 1):
        grown = gns.mul_vecs(span.T[:, None, :],
                             generators[None, :, :]).reshape(-1, gns.dim)
        if residual_outside(grown.T, span) < 100 * tol:
            break
        span = orthonormal_columns(np.hstack([span, grown.T]), 1e-10)
    else:
        raise InvariantViolation("generated algebra did not stabilize")

    new_emb = subalgebra_from_basis(gns, span, rng=rng, tol=tol)
    algebra = new_emb.sub

    incl_images = new_emb.coords_vec(left_ops, tol)  # (n, algebra.dim)
    e_coords = new_emb.coords_vec(e_vec[None, :], tol)[0]
    inclusion = SubalgebraEmbedding(ambient, algebra, incl_images.T)
    inclusion.require_valid(tol)
    sub_in_new = sub.compose(inclusion)

    ext_trace = _solve_extended_trace(algebra, incl_images, e_coords, trace, lam)
    ext = JonesExtension(algebra, algebra.element(e_coords), ext_trace, float(lam),
                         inclusion, sub_in_new, new_emb)
    _verify_jones(ext, sub, trace, lam_mat, tol)
    return ext


def _solve_extended_trace(algebra, incl_images, e_coords, trace, lam):
    """Block weights with tau_ext . incl = tau and tau_ext(x e) = lam tau(x)."""
    n = incl_images.shape[0]
    nblocks = len(algebra.blocks)
    e_mult = algebra.mul_vecs(incl_images, e_coords)
    block_traces = np.zeros((2 * n, nblocks), dtype=complex)
    for alpha in range(nblocks):
        sl = algebra.block_slice(alpha)
        m = algebra.blocks[alpha]
        idx = np.arange(m) * m + np.arange(m)
        block_traces[:n, alpha] = incl_images[:, sl][:, idx].sum(axis=1)
        block_traces[n:, alpha] = e_mult[:, sl][:, idx].sum(axis=1)
    rhs = np.concatenate([trace.coefficient_weights,
                          lam * trace.coefficient_weights]).astype(complex)
    rows = np.vstack([np.real(block_traces), np.imag(block_traces)])
    target = np.concatenate([np.real(rhs), np.imag(rhs)])
    sol, *_ = np.linalg.lstsq(rows, target, rcond=None)
    res = rel_residual(rows @ sol, target)
    if res > 1e-8 or np.any(sol <= 0):
        raise InvariantViolation(f"extended trace inconsistent (max residual {res:.3e})")
    return TraceState(algebra, sol)


def _verify_jones(ext: JonesExtension, sub, old_trace, lam_mat, tol):
    alg = ext.algebra
    e = ext.e.vec
    res = rel_residual(alg.mul_vecs(e, e), e)
    res = max(res, rel_residual(alg.adjoint_vecs(e), e))
    expect = ConditionalExpectation(ext.sub_projection, ext.extended_trace, tol,
                                    verify=False)
    imgs = ext.inclusion.images.T
    exe = alg.mul_vecs(e, alg.mul_vecs(imgs, e))
    res = max(res, rel_residual(exe, alg.mul_vecs(expect.apply_vec(imgs), e)))
    lhs = ext.extended_trace.values(alg.mul_vecs(imgs, e))
    rhs = ext.lam * old_trace.coefficient_weights
    res = max(res, rel_residual(lhs, rhs))
    predicted = sorted(lam_mat.entries @ np.asarray(lam_mat.ambient_blocks))
    if predicted != sorted(alg.blocks):
        raise InvariantViolation("extension dimension does not match the inclusion data")
    if res > 100 * tol:
        raise InvariantViolation(f"extended trace inconsistent (max residual {res:.3e})")
