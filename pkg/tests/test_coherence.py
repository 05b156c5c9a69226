"""Hadamard coherence oracles: sign stream, transform algebra, roundtrips."""

import numpy as np
import pytest
import scipy.linalg

from pvq.coherence import (
    HadamardSpec,
    derive_specs,
    fwht,
    rotate_matrix,
    signs,
    splitmix64,
    unrotate_matrix,
)

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def _splitmix_reference(seed, count):
    """Textbook splitmix64: advance state by the golden gamma, mix, output."""
    out = []
    state = seed
    for _ in range(count):
        state = (state + GOLDEN) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_stream_frozen():
    assert _splitmix_reference(7, 3) == [
        7191089600892374487,
        309689372594955804,
        16616101746815609346,
    ]
    assert [splitmix64(7 + i * GOLDEN) for i in (1, 2, 3)] == _splitmix_reference(7, 3)


def test_signs_match_scalar_reference():
    for seed in (0, 7, 0xDEADBEEF, MASK64):
        for dim in (1, 2, 8, 64):
            got = signs(HadamardSpec(dim, seed))
            want = [
                -1.0 if (w >> 63) else 1.0 for w in _splitmix_reference(seed, dim)
            ]
            assert got.tolist() == want, (seed, dim)


def test_signs_frozen_vector():
    assert signs(HadamardSpec(8, 0xDEADBEEF)).astype(int).tolist() == [
        1, -1, 1, 1, 1, -1, 1, -1,
    ]


def test_derive_specs_frozen():
    row_spec, col_spec = derive_specs(7, 4, 8)
    assert (row_spec.dim, col_spec.dim) == (4, 8)
    assert row_spec.seed == 7191089600892374487
    assert col_spec.seed == 309689372594955804
    # Distinct streams for rows and columns of a square matrix.
    a, b = derive_specs(123, 16, 16)
    assert a.seed != b.seed


def test_forward_two_dim_all_plus_signs():
    # Seed 7 yields (+1, +1) signs at dim 2, so Q is the plain normalized
    # Hadamard butterfly.
    out = fwht(np.array([1.0, 0.0]), HadamardSpec(2, 7))
    assert np.allclose(out, [np.sqrt(0.5), np.sqrt(0.5)], atol=1e-15)
    out = fwht(np.array([0.0, 1.0]), HadamardSpec(2, 7))
    assert np.allclose(out, [np.sqrt(0.5), -np.sqrt(0.5)], atol=1e-15)


def _dense_q(spec):
    return fwht(np.eye(spec.dim), spec)


def test_transform_is_orthogonal():
    for dim in (2, 4, 8, 16):
        spec = HadamardSpec(dim, 42 + dim)
        Q = _dense_q(spec).T  # columns of eye map to rows of Q
        assert np.allclose(Q @ Q.T, np.eye(dim), atol=1e-12)
        assert np.allclose(Q.T @ Q, np.eye(dim), atol=1e-12)


def test_dense_matrix_oracle():
    # Q must equal H_n @ diag(signs) / sqrt(n) with the Sylvester Hadamard H_n.
    for dim in (2, 4, 8, 32):
        spec = HadamardSpec(dim, 9001)
        H = scipy.linalg.hadamard(dim).astype(np.float64)
        expected = H @ np.diag(signs(spec)) / np.sqrt(dim)
        rng = np.random.default_rng(dim)
        v = rng.standard_normal(dim)
        assert np.allclose(fwht(v, spec), expected @ v, atol=1e-12)


def test_roundtrip_various_sizes():
    rng = np.random.default_rng(55)
    for dim in (1, 2, 16, 256, 4096, 16384):
        spec = HadamardSpec(dim, 1234)
        v = rng.standard_normal(dim)
        back = fwht(fwht(v, spec), spec, inverse=True)
        assert np.max(np.abs(back - v)) <= 1e-6
        assert np.max(np.abs(back - v)) <= 1e-10  # float64 is much tighter


def test_norm_preserved():
    rng = np.random.default_rng(8)
    for dim in (4, 64, 1024):
        spec = HadamardSpec(dim, 77)
        v = rng.standard_normal(dim)
        assert abs(np.linalg.norm(fwht(v, spec)) - np.linalg.norm(v)) <= 1e-9


def test_batched_rows_match_loop():
    spec = HadamardSpec(16, 3)
    rng = np.random.default_rng(10)
    X = rng.standard_normal((5, 16))
    batched = fwht(X, spec)
    for i in range(5):
        assert np.allclose(batched[i], fwht(X[i], spec), atol=1e-14)


def test_rotate_matrix_two_by_two_oracle():
    # Seeds 7 and 11 both give all-plus signs at dim 2, so the rotation is
    # exactly H W H / 2 with H = [[1, 1], [1, -1]].
    H = np.array([[1.0, 1.0], [1.0, -1.0]])
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    got = rotate_matrix(W, HadamardSpec(2, 7), HadamardSpec(2, 11))
    assert np.allclose(got, H @ W @ H / 2.0, atol=1e-14)


def test_rotate_unrotate_roundtrip():
    rng = np.random.default_rng(99)
    W = rng.standard_normal((64, 128))
    row_spec, col_spec = derive_specs(2025, 64, 128)
    rotated = rotate_matrix(W, row_spec, col_spec)
    assert not np.allclose(rotated, W)
    back = unrotate_matrix(rotated, row_spec, col_spec)
    assert np.max(np.abs(back - W)) <= 1e-10


def test_rotation_spreads_one_hot():
    # A single spike spreads to magnitude 1/sqrt(rows*cols) ... well below 1.
    W = np.zeros((256, 256))
    W[3, 200] = 1.0
    row_spec, col_spec = derive_specs(5, 256, 256)
    rotated = rotate_matrix(W, row_spec, col_spec)
    assert np.max(np.abs(rotated)) < 0.01
    assert abs(np.sum(rotated**2) - 1.0) <= 1e-9


def test_non_power_of_two_rejected():
    with pytest.raises(ValueError):
        HadamardSpec(12, 0)
    with pytest.raises(ValueError):
        HadamardSpec(0, 0)
    with pytest.raises(ValueError):
        HadamardSpec(2, -1)
    with pytest.raises(ValueError):
        HadamardSpec(2, 1 << 64)
    spec = HadamardSpec(8, 0)
    with pytest.raises(ValueError):
        fwht(np.zeros(6), spec)
    with pytest.raises(ValueError):
        rotate_matrix(np.zeros((8, 6)), spec, spec)
    with pytest.raises(ValueError):
        unrotate_matrix(np.zeros((4, 8)), spec, spec)
    with pytest.raises(ValueError):
        rotate_matrix(np.zeros(8), spec, spec)


def test_dim_one_is_sign_flip():
    plus = HadamardSpec(1, 7)
    v = np.array([3.5])
    s = signs(plus)[0]
    assert np.allclose(fwht(v, plus), s * v)
    assert np.allclose(fwht(fwht(v, plus), plus, inverse=True), v)
