"""Convolution kernels against a direct-summation oracle, plus backend parity.

The oracle below recomputes every output element with explicit Python loops
over all kernel taps, independently of the shifted-slice and loop-nest
implementations under test.
"""

import numpy as np
import pytest

from racnet.errors import ValidationError
from racnet.kernels import numpy_impl, set_backend


def conv3d_oracle(x, w, b):
    B, C, T, H, W = x.shape
    O, _, KT, KH, KW = w.shape
    y = np.zeros((B, O, T, H, W))
    for bi in range(B):
        for o in range(O):
            for t in range(T):
                for i in range(H):
                    for j in range(W):
                        acc = b[o]
                        for c in range(C):
                            for kt in range(KT):
                                for kh in range(KH):
                                    for kw in range(KW):
                                        tt = t + kt - KT // 2
                                        ii = i + kh - KH // 2
                                        jj = j + kw - KW // 2
                                        if 0 <= tt < T and 0 <= ii < H and 0 <= jj < W:
                                            acc += w[o, c, kt, kh, kw] * x[bi, c, tt, ii, jj]
                        y[bi, o, t, i, j] = acc
    return y


def conv2d_oracle(x, w, b):
    # reuse the 3D oracle with a singleton time axis and a 1-long time kernel
    y = conv3d_oracle(x[:, :, None], w[:, :, None], b)
    return y[:, :, 0]


def fd_grads_3d(x, w, gy, eps=1e-6):
    """Finite-difference gradient of sum(conv3d(x, w, 0) * gy) wrt x and w."""
    zero_b = np.zeros(w.shape[0])

    def loss(xv, wv):
        return float((numpy_impl.conv3d_forward(xv, wv, zero_b) * gy).sum())

    gx = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        gx[idx] = (loss(xp, w) - loss(xm, w)) / (2 * eps)
    gw = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        wp, wm = w.copy(), w.copy()
        wp[idx] += eps
        wm[idx] -= eps
        gw[idx] = (loss(x, wp) - loss(x, wm)) / (2 * eps)
    return gx, gw


@pytest.fixture
def tensors3d():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(2, 3, 5, 2, 3))
    w = rng.normal(size=(4, 3, 3, 3, 3))
    b = rng.normal(size=4)
    gy = rng.normal(size=(2, 4, 5, 2, 3))
    return x, w, b, gy


@pytest.fixture
def tensors2d():
    rng = np.random.default_rng(12)
    x = rng.normal(size=(2, 3, 6, 5))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    gy = rng.normal(size=(2, 4, 6, 5))
    return x, w, b, gy


def test_conv3d_forward_matches_oracle(tensors3d):
    x, w, b, _ = tensors3d
    got = numpy_impl.conv3d_forward(x, w, b)
    np.testing.assert_allclose(got, conv3d_oracle(x, w, b), atol=1e-10)


def test_conv2d_forward_matches_oracle(tensors2d):
    x, w, b, _ = tensors2d
    got = numpy_impl.conv2d_forward(x, w, b)
    np.testing.assert_allclose(got, conv2d_oracle(x, w, b), atol=1e-10)


def test_conv3d_same_padding_preserves_shape(tensors3d):
    x, w, b, _ = tensors3d
    assert numpy_impl.conv3d_forward(x, w, b).shape == (2, 4, 5, 2, 3)


def test_conv3d_zero_weights_yield_bias(tensors3d):
    x, w, b, _ = tensors3d
    y = numpy_impl.conv3d_forward(x, np.zeros_like(w), b)
    np.testing.assert_array_equal(y, np.broadcast_to(b[None, :, None, None, None], y.shape))


def test_conv3d_backward_matches_finite_differences():
    rng = np.random.default_rng(21)
    x = rng.normal(size=(1, 2, 4, 2, 2))
    w = rng.normal(size=(3, 2, 3, 3, 3))
    gy = rng.normal(size=(1, 3, 4, 2, 2))
    gx, gw, gb = numpy_impl.conv3d_backward(x, w, gy)
    fx, fw = fd_grads_3d(x, w, gy)
    np.testing.assert_allclose(gx, fx, atol=1e-8)
    np.testing.assert_allclose(gw, fw, atol=1e-8)
    # bias gradient: y is linear in b, so it is gy summed per out-channel
    np.testing.assert_allclose(gb, gy.sum(axis=(0, 2, 3, 4)), atol=1e-12)


def test_conv2d_backward_matches_finite_differences():
    rng = np.random.default_rng(22)
    x = rng.normal(size=(1, 2, 4, 3))
    w = rng.normal(size=(3, 2, 3, 3))
    gy = rng.normal(size=(1, 3, 4, 3))
    gx, gw, gb = numpy_impl.conv2d_backward(x, w, gy)
    fx, fw = fd_grads_3d(x[:, :, None], w[:, :, None], gy[:, :, None])
    np.testing.assert_allclose(gx, fx[:, :, 0], atol=1e-8)
    np.testing.assert_allclose(gw, fw[:, :, 0], atol=1e-8)
    np.testing.assert_allclose(gb, gy.sum(axis=(0, 2, 3)), atol=1e-12)


def test_numba_backend_matches_numpy(tensors3d, tensors2d):
    numba_impl = pytest.importorskip("racnet.kernels.numba_impl")
    x3, w3, b3, gy3 = tensors3d
    x2, w2, b2, gy2 = tensors2d
    np.testing.assert_allclose(numba_impl.conv3d_forward(x3, w3, b3),
                               numpy_impl.conv3d_forward(x3, w3, b3), atol=1e-12)
    np.testing.assert_allclose(numba_impl.conv2d_forward(x2, w2, b2),
                               numpy_impl.conv2d_forward(x2, w2, b2), atol=1e-12)
    for got, want in zip(numba_impl.conv3d_backward(x3, w3, gy3),
                         numpy_impl.conv3d_backward(x3, w3, gy3)):
        np.testing.assert_allclose(got, want, atol=1e-12)
    for got, want in zip(numba_impl.conv2d_backward(x2, w2, gy2),
                         numpy_impl.conv2d_backward(x2, w2, gy2)):
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_set_backend_resolves_and_rejects():
    import racnet.kernels as kernels
    original = kernels.current_backend()
    try:
        assert set_backend("numpy") == "numpy"
        assert kernels.current_backend() == "numpy"
        with pytest.raises(ValidationError):
            set_backend("bogus")
    finally:
        set_backend(original)
