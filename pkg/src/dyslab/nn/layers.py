"""Neural-network layers with hand-derived backward passes.

Conventions:
  * conv stacks run on [N, C, H, W] float arrays, dense layers on [N, D];
  * forward(x, ctx) stores whatever backward needs into the per-call ctx
    dict, so layers hold no mutable per-call state and concurrent eval
    forwards on one model are safe;
  * backward(dy, ctx) returns (dx, {param_name: grad});
  * U-Net skip connections use a stack threaded through forward/backward
    (SaveSkip pushes, ConcatSkip pops; LIFO pairs encoder to decoder).

Math follows the input dtype: training runs float32, the gradient checker
feeds float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch, ValueOutOfRange


class Layer:
    """Base layer: named, optionally parameterized."""

    def __init__(self, name: str):
        self.name = name

    def params(self) -> dict:
        return {}

    def init(self, rng: np.random.Generator) -> None:
        pass

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        raise NotImplementedError

    def backward(self, dy, ctx, skip_grads=None):
        raise NotImplementedError

    def hyperparams(self) -> str:
        return ""


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def _im2col(xp: np.ndarray, k: int, out_h: int, out_w: int) -> np.ndarray:
    """[N, C, Hp, Wp] -> [N*out_h*out_w, C*k*k] patch matrix (stride 1).

    Writes each kernel offset straight into the final row-major layout so
    the gather happens in one pass (no intermediate transpose copy).
    """
    n, c = xp.shape[:2]
    cols = np.empty((n, out_h, out_w, c, k, k), dtype=xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, :, :, i, j] = \
                xp[:, :, i:i + out_h, j:j + out_w].transpose(0, 2, 3, 1)
    return cols.reshape(n * out_h * out_w, c * k * k)


def _col2im(dcols: np.ndarray, n: int, c: int, hp: int, wp: int, k: int,
            out_h: int, out_w: int) -> np.ndarray:
    """Adjoint of _im2col: accumulate patch gradients back onto the image."""
    d = dcols.reshape(n, out_h, out_w, c, k, k)
    dxp = np.zeros((n, c, hp, wp), dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + out_h, j:j + out_w] += \
                d[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dxp


class Conv2D(Layer):
    """Stride-1 2-D convolution, 'same' (zero pad) or 'valid'."""

    def __init__(self, name, in_channels, out_channels, kernel_size=3, padding="same"):
        super().__init__(name)
        if padding not in ("same", "valid"):
            raise ValueOutOfRange(f"padding must be same|valid, got {padding!r}")
        if padding == "same" and kernel_size % 2 == 0:
            raise ValueOutOfRange("same padding needs an odd kernel")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.padding = padding
        self.kernel = np.zeros((out_channels, in_channels, kernel_size, kernel_size),
                               dtype=np.float32)
        self.bias = np.zeros(out_channels, dtype=np.float32)

    def params(self):
        return {"kernel": self.kernel, "bias": self.bias}

    def init(self, rng):
        fan_in = self.in_channels * self.kernel_size ** 2
        self.kernel = he_uniform(rng, self.kernel.shape, fan_in)
        self.bias = np.zeros(self.out_channels, dtype=np.float32)

    def _pad(self):
        return (self.kernel_size - 1) // 2 if self.padding == "same" else 0

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeMismatch(
                f"{self.name}: expected [N, {self.in_channels}, H, W], got {x.shape}")
        k, p = self.kernel_size, self._pad()
        n, _, h, w = x.shape
        out_h, out_w = h + 2 * p - k + 1, w + 2 * p - k + 1
        if out_h < 1 or out_w < 1:
            raise ShapeMismatch(f"{self.name}: input {h}x{w} too small for kernel {k}")
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        cols = _im2col(xp, k, out_h, out_w)
        y = cols @ self.kernel.reshape(self.out_channels, -1).T + self.bias
        y = y.reshape(n, out_h, out_w, self.out_channels).transpose(0, 3, 1, 2)
        if ctx is not None:
            ctx["x"] = x
            ctx["dims"] = (n, out_h, out_w)
        return np.ascontiguousarray(y)

    def backward(self, dy, ctx, skip_grads=None):
        x = ctx["x"]
        n, out_h, out_w = ctx["dims"]
        k, p = self.kernel_size, self._pad()
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        cols = _im2col(xp, k, out_h, out_w)  # recomputed: trades time for memory
        dyf = dy.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        wf = self.kernel.reshape(self.out_channels, -1)
        dk = (dyf.T @ cols).reshape(self.kernel.shape)
        db = dyf.sum(axis=0)
        dxp = _col2im(dyf @ wf, n, self.in_channels, xp.shape[2], xp.shape[3],
                      k, out_h, out_w)
        dx = dxp[:, :, p:p + x.shape[2], p:p + x.shape[3]] if p else dxp
        return dx, {"kernel": dk, "bias": db}

    def hyperparams(self):
        return (f"in={self.in_channels} out={self.out_channels} "
                f"k={self.kernel_size} pad={self.padding}")


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; odd edges padded with -inf."""

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if x.ndim != 4:
            raise ShapeMismatch(f"{self.name}: expected [N, C, H, W], got {x.shape}")
        n, c, h, w = x.shape
        ph, pw = h % 2, w % 2
        xp = x
        if ph or pw:
            xp = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)),
                        constant_values=-np.inf)
        h2, w2 = xp.shape[2] // 2, xp.shape[3] // 2
        windows = xp.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5) \
                    .reshape(n, c, h2, w2, 4)
        idx = np.argmax(windows, axis=-1)  # first max wins on ties
        y = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        if ctx is not None:
            ctx["idx"] = idx
            ctx["in_shape"] = (h, w)
        return y

    def backward(self, dy, ctx, skip_grads=None):
        idx = ctx["idx"]
        h, w = ctx["in_shape"]
        n, c, h2, w2 = dy.shape
        dwin = np.zeros((n, c, h2, w2, 4), dtype=dy.dtype)
        np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
        dxp = dwin.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5) \
                  .reshape(n, c, h2 * 2, w2 * 2)
        return dxp[:, :, :h, :w], {}


class Dense(Layer):
    """Affine map on [N, D_in] -> [N, D_out]."""

    def __init__(self, name, in_dim, out_dim):
        super().__init__(name)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = np.zeros((in_dim, out_dim), dtype=np.float32)
        self.bias = np.zeros(out_dim, dtype=np.float32)

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def init(self, rng):
        self.weight = he_uniform(rng, self.weight.shape, self.in_dim)
        self.bias = np.zeros(self.out_dim, dtype=np.float32)

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"{self.name}: expected [N, {self.in_dim}], got {x.shape}")
        if ctx is not None:
            ctx["x"] = x
        return x @ self.weight + self.bias

    def backward(self, dy, ctx, skip_grads=None):
        x = ctx["x"]
        return dy @ self.weight.T, {"weight": x.T @ dy, "bias": dy.sum(axis=0)}

    def hyperparams(self):
        return f"in={self.in_dim} out={self.out_dim}"


class ReLU(Layer):
    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if ctx is not None:
            ctx["mask"] = x > 0
        return np.maximum(x, 0)

    def backward(self, dy, ctx, skip_grads=None):
        return dy * ctx["mask"], {}


class Sigmoid(Layer):
    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        if ctx is not None:
            ctx["y"] = y
        return y

    def backward(self, dy, ctx, skip_grads=None):
        y = ctx["y"]
        return dy * y * (1.0 - y), {}


class Softmax(Layer):
    """Row-wise softmax over the last axis."""

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        e = np.exp(x - np.max(x, axis=-1, keepdims=True))
        y = e / e.sum(axis=-1, keepdims=True)
        if ctx is not None:
            ctx["y"] = y
        return y

    def backward(self, dy, ctx, skip_grads=None):
        y = ctx["y"]
        return y * (dy - (dy * y).sum(axis=-1, keepdims=True)), {}


class Dropout(Layer):
    """Inverted dropout: eval is the identity."""

    def __init__(self, name, rate):
        super().__init__(name)
        if not 0 <= rate < 1:
            raise ValueOutOfRange(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if not train or self.rate == 0:
            if ctx is not None:
                ctx["mask"] = None
            return x
        if rng is None:
            raise ValueOutOfRange(f"{self.name}: training dropout needs an RNG")
        mask = rng.random(x.shape) >= self.rate
        if ctx is not None:
            ctx["mask"] = mask
        return x * mask / (1.0 - self.rate)

    def backward(self, dy, ctx, skip_grads=None):
        mask = ctx["mask"]
        if mask is None:
            return dy, {}
        return dy * mask / (1.0 - self.rate), {}

    def hyperparams(self):
        return f"rate={self.rate}"


class Flatten(Layer):
    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if ctx is not None:
            ctx["shape"] = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy, ctx, skip_grads=None):
        return dy.reshape(ctx["shape"]), {}


class UpsampleNN(Layer):
    """Nearest-neighbour 2x upsampling by pixel duplication."""

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if x.ndim != 4:
            raise ShapeMismatch(f"{self.name}: expected [N, C, H, W], got {x.shape}")
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, dy, ctx, skip_grads=None):
        n, c, h2, w2 = dy.shape
        return dy.reshape(n, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5)), {}


class SaveSkip(Layer):
    """Identity that records its input for a later ConcatSkip (LIFO)."""

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        skips.append(x)
        return x

    def backward(self, dy, ctx, skip_grads=None):
        return dy + skip_grads.pop(), {}


class ConcatSkip(Layer):
    """Concatenate the most recent saved skip along channels."""

    def forward(self, x, ctx=None, *, train=False, rng=None, skips=None):
        if not skips:
            raise ShapeMismatch(f"{self.name}: no saved skip to concatenate")
        s = skips.pop()
        if x.shape[0] != s.shape[0] or x.shape[2:] != s.shape[2:]:
            raise ShapeMismatch(
                f"{self.name}: skip {s.shape} does not align with {x.shape}")
        if ctx is not None:
            ctx["split"] = x.shape[1]
        return np.concatenate([x, s], axis=1)

    def backward(self, dy, ctx, skip_grads=None):
        split = ctx["split"]
        skip_grads.append(np.ascontiguousarray(dy[:, split:]))
        return np.ascontiguousarray(dy[:, :split]), {}
