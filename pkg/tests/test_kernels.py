import numpy as np
import pytest

import propagator._pykernels as pykernels
from tests._oracle import jaccard

try:
    import propagator._native as native
except ImportError:
    native = None

BACKENDS = [pykernels] if native is None else [pykernels, native]


def _ids(backend):
    return backend.BACKEND


def _sets_to_csr(sets):
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    ids = []
    for row, s in enumerate(sets):
        ids.extend(sorted(s))
        indptr[row + 1] = len(ids)
    return indptr, np.asarray(ids, dtype=np.int32)


def _dense_to_csr(mat):
    indptr = np.zeros(mat.shape[0] + 1, dtype=np.int64)
    idx, data = [], []
    for row in range(mat.shape[0]):
        cols = np.flatnonzero(mat[row])
        idx.extend(cols.tolist())
        data.extend(mat[row, cols].tolist())
        indptr[row + 1] = len(idx)
    return indptr, np.asarray(idx, dtype=np.int32), np.asarray(data, dtype=np.float64)


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_jaccard_matches_set_arithmetic(backend):
    rng = np.random.default_rng(7)
    for _ in range(25):
        a_sets = [set(rng.choice(12, size=rng.integers(0, 6), replace=False).tolist()) for _ in range(4)]
        b_sets = [set(rng.choice(12, size=rng.integers(0, 6), replace=False).tolist()) for _ in range(5)]
        got = backend.jaccard_pairwise(*_sets_to_csr(a_sets), *_sets_to_csr(b_sets))
        want = np.array([[jaccard(a, b) for b in b_sets] for a in a_sets])
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_jaccard_both_empty_is_zero(backend):
    got = backend.jaccard_pairwise(*_sets_to_csr([set()]), *_sets_to_csr([set()]))
    assert got[0, 0] == 0.0


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_cosine_matches_dense_formula(backend):
    rng = np.random.default_rng(11)
    for _ in range(25):
        a = rng.random((3, 8)) * (rng.random((3, 8)) > 0.4)
        b = rng.random((5, 8)) * (rng.random((5, 8)) > 0.4)
        got = backend.cosine_pairwise(*_dense_to_csr(a), *_dense_to_csr(b), 8)
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        denom = np.outer(na, nb)
        want = np.where(denom > 0, (a @ b.T) / np.where(denom > 0, denom, 1.0), 0.0)
        np.testing.assert_allclose(got, np.clip(want, 0, 1), rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_cosine_zero_norm_rows(backend):
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    got = backend.cosine_pairwise(*_dense_to_csr(a), *_dense_to_csr(a), 2)
    assert got[0, 0] == 0.0
    assert got[0, 1] == 0.0
    assert got[1, 1] == 1.0


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_jacobi_reconstructs_symmetric_matrices(backend):
    rng = np.random.default_rng(3)
    for n in (1, 2, 5, 12, 30):
        x = rng.standard_normal((n, n))
        a = (x + x.T) / 2
        w, v = backend.jacobi_eigh(a)
        assert np.all(np.diff(w) >= -1e-12)
        np.testing.assert_allclose(v @ v.T, np.eye(n), atol=1e-9)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-9)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-9)


@pytest.mark.parametrize("backend", BACKENDS, ids=_ids)
def test_jacobi_zero_matrix(backend):
    w, v = backend.jacobi_eigh(np.zeros((4, 4)))
    np.testing.assert_array_equal(w, np.zeros(4))
    np.testing.assert_array_equal(v, np.eye(4))


@pytest.mark.skipif(native is None, reason="compiled kernels unavailable")
def test_backends_agree():
    rng = np.random.default_rng(19)
    a_sets = [set(rng.choice(20, size=5, replace=False).tolist()) for _ in range(6)]
    csr = _sets_to_csr(a_sets)
    np.testing.assert_allclose(
        native.jaccard_pairwise(*csr, *csr), pykernels.jaccard_pairwise(*csr, *csr), atol=0
    )
    docs = rng.random((6, 10)) * (rng.random((6, 10)) > 0.5)
    dcsr = _dense_to_csr(docs)
    np.testing.assert_allclose(
        native.cosine_pairwise(*dcsr, *dcsr, 10),
        pykernels.cosine_pairwise(*dcsr, *dcsr, 10),
        atol=1e-15,
    )
    x = rng.standard_normal((9, 9))
    sym = (x + x.T) / 2
    wn, _ = native.jacobi_eigh(sym)
    wp, _ = pykernels.jacobi_eigh(sym)
    np.testing.assert_allclose(wn, wp, atol=1e-12)
