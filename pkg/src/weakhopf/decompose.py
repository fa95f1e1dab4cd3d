"""Recognition of abstractly presented *-algebras as multimatrix algebras.

Input is a multiplication tensor, a unit vector and an antilinear involution
matrix over some basis.  The regular trace of a C*-algebra is positive and
faithful, so it provides a Hilbert metric in which left multiplication is a
*-representation; from there the block split proceeds spectrally, as in
:func:`weakhopf.multimatrix.subalgebra_from_basis`.
"""

import numpy as np

from ._linalg import cluster_values, max_abs, null_space, rel_residual
from .errors import InvariantViolation
from .multimatrix import MultiMatrixAlgebra

__all__ = ["StructureAlgebra", "decompose_structure_algebra"]


class StructureAlgebra:
    """A *-algebra given by structure constants over an arbitrary basis."""

    def __init__(self, mult: np.ndarray, unit: np.ndarray, involution: np.ndarray):
        self.mult = np.asarray(mult, dtype=complex)
        self.unit = np.asarray(unit, dtype=complex).reshape(-1)
        self.involution = np.asarray(involution, dtype=complex)
        self.dim = self.unit.shape[0]
        if self.mult.shape != (self.dim,) * 3 or self.involution.shape != (self.dim,) * 2:
            raise InvariantViolation("structure tensor shapes are inconsistent")
        self._left_flat = self.mult.reshape(self.dim, -1)
        self._right_flat = np.ascontiguousarray(
            self.mult.transpose(1, 0, 2)).reshape(self.dim, -1)

    def left_matrix(self, vec: np.ndarray) -> np.ndarray:
        return (vec @ self._left_flat).reshape(self.dim, self.dim).T

    def right_matrix(self, vec: np.ndarray) -> np.ndarray:
        return (vec @ self._right_flat).reshape(self.dim, self.dim).T

    def mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        if u.ndim == 1:
            partial = (u @ self._left_flat).reshape(self.dim, self.dim)
            return v @ partial
        if v.ndim == 1:
            partial = (v @ self._right_flat).reshape(self.dim, self.dim)
            return u @ partial
        return np.einsum("...a,...b,abk->...k", u, v, self.mult, optimize=True)

    def pairwise(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """All-pairs products of two stacks (a, dim), (b, dim) -> (a, b, dim),
        via staged matrix products."""
        partial = np.tensordot(u, self.mult, axes=([1], [0]))  # (a, b-slot, k)
        na, nb = u.shape[0], v.shape[0]
        flat = partial.transpose(0, 2, 1).reshape(na * self.dim, self.dim)
        return (flat @ v.T).reshape(na, self.dim, nb).transpose(0, 2, 1)

    def star(self, vec: np.ndarray) -> np.ndarray:
        return self.involution @ np.conj(vec)

    def regular_trace_vector(self) -> np.ndarray:
        return np.einsum("kaa->k", self.mult)


class _Retry(Exception):
    pass


def _orthonormalize(algebra: StructureAlgebra, tol: float):
    """Basis change into coordinates where the regular trace metric is the
    standard one.  Returns (transform T, inverse)."""
    tr = algebra.regular_trace_vector()
    gram = np.einsum("ai,ajk,k->ij", algebra.involution, algebra.mult, tr,
                     optimize=True)
    gram = 0.5 * (gram + gram.conj().T)
    vals, vecs = np.linalg.eigh(gram)
    if vals[0] <= tol * max(vals[-1], 1.0):
        raise InvariantViolation("involution is not positive (no C* structure)")
    t = vecs @ np.diag(1.0 / np.sqrt(vals))
    t_inv = np.diag(np.sqrt(vals)) @ vecs.conj().T
    return t, t_inv


def decompose_structure_algebra(algebra: StructureAlgebra, *, rng=None,
                                tol: float = 1e-9):
    """Split an abstract finite-dimensional C*-algebra into matrix blocks.

    Returns ``(multi, change)`` where ``change`` has one column per canonical
    matrix unit of ``multi``, expressed in the original basis.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    t, t_inv = _orthonormalize(algebra, tol)
    d = algebra.dim
    mult_on = np.tensordot(algebra.mult, t_inv, axes=([2], [1]))   # (a, b, k)
    mult_on = np.tensordot(t, mult_on, axes=([0], [0]))            # (i, b, k)
    mult_on = np.tensordot(t, mult_on, axes=([0], [1]))            # (j, i, k)
    mult_on = mult_on.transpose(1, 0, 2)
    unit_on = t_inv @ algebra.unit
    inv_on = t_inv @ algebra.involution @ np.conj(t)
    on = StructureAlgebra(mult_on, unit_on, inv_on)

    center = _center_span(on, rng, tol)
    for _ in range(8):
        try:
            units, sizes = _split(on, center, rng)
            break
        except _Retry:
            continue
    else:
        raise InvariantViolation("failed to split algebra into matrix blocks")

    multi = MultiMatrixAlgebra(sizes)
    if multi.dim != d:
        raise InvariantViolation("matrix units do not span the algebra")
    change_on = np.column_stack(units)
    _verify_units(on, multi, change_on, tol)
    return multi, t @ change_on


def _random_self_adjoint(on: StructureAlgebra, span: np.ndarray, rng):
    coeff = rng.standard_normal(span.shape[1]) + 1j * rng.standard_normal(span.shape[1])
    x = span @ coeff
    return 0.5 * (x + on.star(x))


def _center_span(on: StructureAlgebra, rng, tol: float) -> np.ndarray:
    d = on.dim
    eye = np.eye(d, dtype=complex)
    gens = [eye @ (rng.standard_normal(d) + 1j * rng.standard_normal(d))
            for _ in range(min(d, 3))]
    for _ in range(6):
        rows = [on.left_matrix(g) - on.right_matrix(g) for g in gens]
        cand = null_space(np.vstack(rows), 1e-10)
        comm = on.pairwise(cand.T, eye) - on.pairwise(eye, cand.T).transpose(1, 0, 2)
        worst = max_abs(comm) / max(max_abs(cand), 1.0)
        if worst <= 100 * tol:
            return cand
        j = int(np.argmax(np.abs(comm).reshape(cand.shape[1], d, -1).max(axis=(0, 2))))
        gens.append(eye[j])
    raise InvariantViolation("center computation did not stabilize")


def _spectral_projections(on: StructureAlgebra, h: np.ndarray, gap=1e-6):
    lmat = on.left_matrix(h)
    lmat = 0.5 * (lmat + lmat.conj().T)  # Hermitian in the regular metric
    vals, vecs = np.linalg.eigh(lmat)
    scale = max(max_abs(vals), 1.0)
    clusters = cluster_values(vals, gap * scale)
    reps, projections = [], []
    for cluster in clusters:
        sel = vecs[:, cluster]
        reps.append(float(np.mean(vals[cluster])))
        projections.append(sel @ (sel.conj().T @ on.unit))
    return np.asarray(reps), projections


def _split(on: StructureAlgebra, center: np.ndarray, rng):
    z = _random_self_adjoint(on, center, rng)
    vals, projs = _spectral_projections(on, z)
    if len(projs) != center.shape[1]:
        raise _Retry
    if rel_residual(np.sum(projs, axis=0), on.unit) > 1e-6:
        raise _Retry

    eye = np.eye(on.dim, dtype=complex)
    units, sizes = [], []
    for p in projs:
        corner = on.mul(on.mul(p, eye), p)  # p u_i p for every basis vector
        corner = _orth_columns(corner.T)
        msq = corner.shape[1]
        m = int(round(np.sqrt(msq)))
        if m * m != msq:
            raise _Retry
        diag = _minimal_projections(on, corner, p, m, rng)
        units.extend(_matrix_units(on, diag, rng))
        sizes.append(m)
    return units, sizes


def _orth_columns(mat: np.ndarray, tol=1e-8) -> np.ndarray:
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    return u[:, : int(np.sum(s > tol * s[0]))]


def _minimal_projections(on, corner, p, m, rng):
    if m == 1:
        return [p]
    h = _random_self_adjoint(on, corner, rng)
    vals, projs = _spectral_projections(on, h)
    scale = max(max_abs(vals), 1.0)
    keep = [q for v, q in zip(vals, projs) if abs(v) > 1e-6 * scale]
    if len(keep) != m:
        raise _Retry
    if rel_residual(np.sum(keep, axis=0), p) > 1e-6:
        raise _Retry
    return keep


def _matrix_units(on, diag, rng):
    m = len(diag)
    if m == 1:
        return [diag[0]]
    d = on.dim
    isometries = [diag[0]]
    for k in range(1, m):
        for _ in range(8):
            y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            u = on.mul(diag[k], on.mul(y, diag[0]))
            gram = on.mul(on.star(u), u)
            c = float(np.real(np.vdot(diag[0], gram) / np.vdot(diag[0], diag[0])))
            if c > 1e-10 and rel_residual(gram, c * diag[0]) < 1e-6:
                isometries.append(u / np.sqrt(c))
                break
        else:
            raise _Retry
    units = []
    for j in range(m):
        for l in range(m):
            units.append(on.mul(isometries[j], on.star(isometries[l])))
    return units


def _verify_units(on: StructureAlgebra, multi: MultiMatrixAlgebra,
                  change: np.ndarray, tol: float):
    cols = change.T  # (multi.dim, on.dim)
    canon = multi.mult_tensor
    prods = on.pairwise(cols, cols)
    expected = np.tensordot(canon, cols, axes=([2], [0]))
    if rel_residual(prods, expected) > 1e-6:
        raise InvariantViolation("matrix-unit relations failed")
    eye = np.eye(multi.dim, dtype=complex)
    stars = np.stack([on.star(cols[j]) for j in range(multi.dim)])
    if rel_residual(stars, multi.adjoint_vecs(eye) @ cols) > 1e-6:
        raise InvariantViolation("matrix units are not adjoint-compatible")
    if rel_residual(np.tensordot(multi.unit().vec, cols, axes=([0], [0])), on.unit) > 1e-6:
        raise InvariantViolation("matrix units do not sum to the unit")
