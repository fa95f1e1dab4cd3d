"""Dense linear-algebra helpers shared by the workbench modules.

Everything here works on plain complex ndarrays; subspaces are represented
by matrices whose *columns* span them.
"""

import numpy as np
import scipy.linalg


def max_abs(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def rel_residual(lhs, rhs) -> float:
    """Max-abs deviation between two arrays, relative to the largest operand
    (floored at 1 so near-zero comparisons are absolute)."""
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    scale = max(max_abs(lhs), max_abs(rhs), 1.0)
    if lhs.size == 0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs)) / scale)


def orthonormal_columns(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span of ``vectors``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    if vectors.shape[1] == 0:
        return vectors
    u, s, _ = scipy.linalg.svd(vectors, full_matrices=False, lapack_driver="gesdd")
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def null_space(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``mat``.

    The cutoff is floored at ``tol`` itself so an (almost) zero matrix has a
    full kernel; callers build these matrices from O(1)-normalized data.
    """
    mat = np.asarray(mat, dtype=complex)
    m, n = mat.shape
    if m == 0:
        return np.eye(n, dtype=complex)
    if m < n:
        # kernel of the Gram matrix; avoids the huge left factor of a wide SVD
        gram = mat.conj().T @ mat
        vals, vecs = np.linalg.eigh(gram)
        cutoff = (tol * max(np.sqrt(max(float(vals[-1]), 0.0)), 1.0)) ** 2
        return vecs[:, vals <= cutoff]
    _, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd")
    cutoff = tol * max(float(s[0]) if s.size else 0.0, 1.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:, :].conj().T


def numeric_rank(mat: np.ndarray, tol: float = 1e-10) -> int:
    mat = np.asarray(mat, dtype=complex)
    if mat.size == 0:
        return 0
    s = scipy.linalg.svdvals(mat)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def projector(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the column span."""
    q = orthonormal_columns(vectors, tol)
    return q @ q.conj().T


def subspace_residual(span_a: np.ndarray, span_b: np.ndarray, tol: float = 1e-10) -> float:
    """Operator-norm distance between the orthogonal projectors of two spans.

    Zero iff the spans coincide; 1 iff one contains a direction orthogonal
    to the other.
    """
    pa = projector(span_a, tol)
    pb = projector(span_b, tol)
    if pa.size == 0 and pb.size == 0:
        return 0.0
    return float(scipy.linalg.norm(pa - pb, 2))


def residual_outside(vectors: np.ndarray, q: np.ndarray) -> float:
    """Relative distance of the given column vectors from the span of the
    orthonormal columns ``q``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    if vectors.shape[1] == 0:
        return 0.0
    rest = vectors - q @ (q.conj().T @ vectors)
    return max_abs(rest) / max(max_abs(vectors), 1.0)


def containment_residual(vectors: np.ndarray, span: np.ndarray, tol: float = 1e-10) -> float:
    """How far the given vectors stick out of the span (relative)."""
    return residual_outside(vectors, orthonormal_columns(span, tol))


def intersection_dim(span_a: np.ndarray, span_b: np.ndarray, tol: float = 1e-10) -> int:
    qa = orthonormal_columns(span_a, tol)
    qb = orthonormal_columns(span_b, tol)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return 0
    return qa.shape[1] + qb.shape[1] - numeric_rank(np.hstack([qa, qb]), tol)


def cluster_values(values: np.ndarray, gap: float) -> list[np.ndarray]:
    """Group sorted real values into clusters separated by more than ``gap``.

    Returns index arrays into the original ``values``.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values)
    clusters: list[list[int]] = []
    for idx in order:
        if clusters and values[idx] - values[clusters[-1][-1]] <= gap:
            clusters[-1].append(int(idx))
        else:
            clusters.append([int(idx)])
    return [np.array(c, dtype=int) for c in clusters]


def condition_number(mat: np.ndarray) -> float:
    s = scipy.linalg.svdvals(np.asarray(mat, dtype=complex))
    if s.size == 0 or s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])
