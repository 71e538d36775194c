"""Attention and distance-based correlation matrices and scale fusion."""

import math

import numpy as np
import pytest

from racnet.correlation import (attention_correlation, fuse_scales,
                                tsm_correlation, tsm_scores)
from racnet.errors import NumericError, ValidationError


def attention_oracle(x, wq, wk):
    """Per-entry exp/normalize recomputation with Python floats."""
    n, _ = x.shape
    h = wq.shape[0]
    d_h = wq.shape[2]
    out = np.zeros((n, n, h))
    for hi in range(h):
        q = x @ wq[hi]
        k = x @ wk[hi]
        for i in range(n):
            raw = [float(q[i] @ k[j]) / math.sqrt(d_h) for j in range(n)]
            denom = sum(math.exp(r) for r in raw)
            for j in range(n):
                out[i, j, hi] = math.exp(raw[j]) / denom
    return out


@pytest.fixture
def head_weights():
    rng = np.random.default_rng(31)
    wq = rng.normal(0.0, 0.3, size=(2, 6, 3))
    wk = rng.normal(0.0, 0.3, size=(2, 6, 3))
    return wq, wk


# --- attention ----------------------------------------------------------------

def test_identical_rows_give_uniform_attention(head_weights):
    wq, wk = head_weights
    x = np.tile(np.linspace(0.0, 1.0, 6), (5, 1))
    corr = attention_correlation(x, wq, wk)
    np.testing.assert_allclose(corr, np.full((5, 5, 2), 0.2), atol=1e-12)


def test_single_frame_attention_is_one(head_weights):
    wq, wk = head_weights
    x = np.random.default_rng(1).normal(size=(1, 6))
    corr = attention_correlation(x, wq, wk)
    np.testing.assert_allclose(corr, np.ones((1, 1, 2)), atol=1e-15)


def test_matches_per_entry_oracle(head_weights):
    wq, wk = head_weights
    x = np.random.default_rng(2).normal(size=(4, 6))
    corr = attention_correlation(x, wq, wk)
    np.testing.assert_allclose(corr, attention_oracle(x, wq, wk), atol=1e-12)


def test_rows_normalized_and_bounded(head_weights):
    wq, wk = head_weights
    x = np.random.default_rng(3).normal(size=(9, 6))
    corr = attention_correlation(x, wq, wk)
    np.testing.assert_allclose(corr.sum(axis=1), np.ones((9, 2)), atol=1e-12)
    assert (corr >= 0).all() and (corr <= 1).all()


def test_shift_invariance_of_row_normalization(head_weights):
    """Adding a constant to every pre-normalization score leaves the output
    unchanged; verified by recomputing with shifted scores."""
    wq, wk = head_weights
    x = np.random.default_rng(4).normal(size=(5, 6))
    corr = attention_correlation(x, wq, wk)
    d_h = wq.shape[2]
    for hi in range(2):
        scores = (x @ wq[hi]) @ (x @ wk[hi]).T / math.sqrt(d_h) + 7.3
        shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
        shifted /= shifted.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(corr[:, :, hi], shifted, atol=1e-12)


def test_attention_shape_validation(head_weights):
    wq, wk = head_weights
    with pytest.raises(ValidationError):
        attention_correlation(np.zeros((4, 5)), wq, wk)  # d_e mismatch
    with pytest.raises(ValidationError):
        attention_correlation(np.zeros((4, 6, 1)), wq, wk)


def test_non_finite_scores_rejected(head_weights):
    wq, wk = head_weights
    x = np.full((3, 6), 1e300)
    with np.errstate(over="ignore"), pytest.raises(NumericError):
        attention_correlation(x, wq, wk)


# --- distance mode --------------------------------------------------------------

def test_tsm_scores_symmetric_zero_diagonal_nonpositive():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rng.normal(size=(7, 5))
        s = tsm_scores(x)
        np.testing.assert_array_equal(s, s.T)
        np.testing.assert_array_equal(np.diag(s), np.zeros(7))
        assert (s <= 0).all()


def test_tsm_scores_match_pairwise_distances():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(5, 4))
    s = tsm_scores(x)
    for i in range(5):
        for j in range(5):
            want = -float(((x[i] - x[j]) ** 2).sum()) / math.sqrt(4)
            assert abs(s[i, j] - want) < 1e-12


def test_tsm_identical_rows_uniform():
    x = np.tile(np.arange(4.0), (6, 1))
    corr = tsm_correlation(x)
    np.testing.assert_allclose(corr, np.full((6, 6, 1), 1.0 / 6.0), atol=1e-12)


def test_tsm_row_argmax_on_diagonal():
    x = np.array([[0.0, 0.0], [3.0, 1.0], [-2.0, 5.0]])
    corr = tsm_correlation(x)[:, :, 0]
    np.testing.assert_array_equal(np.argmax(corr, axis=1), np.arange(3))


# --- fusion ----------------------------------------------------------------------

def test_fuse_concatenates_scale_major():
    rng = np.random.default_rng(7)
    parts = [rng.normal(size=(4, 4, 2)) for _ in range(3)]
    fused = fuse_scales(parts)
    assert fused.shape == (4, 4, 6)
    for m, part in enumerate(parts):
        np.testing.assert_array_equal(fused[:, :, 2 * m:2 * (m + 1)], part)


def test_fuse_single_scale_passthrough():
    part = np.random.default_rng(8).normal(size=(5, 5, 3))
    np.testing.assert_array_equal(fuse_scales([part]), part)


def test_fuse_rejects_mismatched_shapes():
    with pytest.raises(ValidationError):
        fuse_scales([np.zeros((4, 4, 2)), np.zeros((5, 5, 2))])
    with pytest.raises(ValidationError):
        fuse_scales([])
