"""Vectorised numpy fallbacks for the compiled kernels.

Same contracts as ``_native``: token sets arrive as concatenated sorted
int32 arrays with int64 offsets (CSR layout without data), documents as
full CSR triples. Results are float64 and match the compiled versions to
floating-point accuracy, not bit-for-bit.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_EPS = np.finfo(np.float64).tiny


def _binary_matrix(indptr: np.ndarray, ids: np.ndarray, n_cols: int) -> np.ndarray:
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    mat = np.zeros((len(indptr) - 1, n_cols), dtype=np.float64)
    if len(ids):
        mat[rows, ids] = 1.0
    return mat

def jaccard_pairwise(
    a_indptr: np.ndarray, a_ids: np.ndarray, b_indptr: np.ndarray, b_ids: np.ndarray
) -> np.ndarray:
    """|a_i ∩ b_j| / |a_i ∪ b_j| for every row pair; both-empty pairs give 0."""
    n_cols = 0
    if len(a_ids):
        n_cols = int(a_ids.max()) + 1
    if len(b_ids):
        n_cols = max(n_cols, int(b_ids.max()) + 1)
    a = _binary_matrix(a_indptr, a_ids, n_cols)
    b = _binary_matrix(b_indptr, b_ids, n_cols)
    inter = a @ b.T
    sizes_a = np.diff(a_indptr).astype(np.float64)
    sizes_b = np.diff(b_indptr).astype(np.float64)
    union = sizes_a[:, None] + sizes_b[None, :] - inter
    return np.where(union > 0, inter / np.maximum(union, 1.0), 0.0)

def _dense(indptr: np.ndarray, idx: np.ndarray, data: np.ndarray, n_cols: int) -> np.ndarray:
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    mat = np.zeros((len(indptr) - 1, n_cols), dtype=np.float64)
    if len(idx):
        mat[rows, idx] = data
    return mat

def cosine_pairwise(
    a_indptr: np.ndarray,
    a_idx: np.ndarray,
    a_data: np.ndarray,
    b_indptr: np.ndarray,
    b_idx: np.ndarray,
    b_data: np.ndarray,
    n_cols: int,
) -> np.ndarray:
    """Cosine of every row pair, 0 where either norm is 0, clipped to [0,1]."""
    a = _dense(a_indptr, a_idx, a_data, n_cols)
    b = _dense(b_indptr, b_idx, b_data, n_cols)
    num = a @ b.T
    norm_a = np.linalg.norm(a, axis=1)
    norm_b = np.linalg.norm(b, axis=1)
    denom = norm_a[:, None] * norm_b[None, :]
    out = np.where(denom > 0, num / np.maximum(denom, _EPS), 0.0)
    return np.clip(out, 0.0, 1.0)

def jacobi_eigh(matrix: np.ndarray, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic-Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigenvalues ascending, eigenvector columns). Stable-sorted so
    degenerate eigenvalues keep a deterministic column order.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    if n < 2:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
