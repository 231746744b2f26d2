"""Neural layers built on the autograd tensor.

Every layer owns its parameters as Tensors with requires_grad=True,
exposes them through ``params()`` as (name, tensor) pairs, and is a plain
callable on batched inputs.  Sequence inputs are (batch, steps, features)
with time along axis 1.
"""
from __future__ import annotations

import numpy as np

from .autograd import Tensor, no_grad


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    """Glorot/Xavier uniform init, limit sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """Affine map y = x W + b applied along the last axis.

    Parameters
    ----------
    d_in, d_out : feature widths
    rng : generator used for the Glorot init; biases start at zero
    """

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name: str = "dense"):
        self.name = name
        self.weight = Tensor(glorot_uniform(rng, d_in, d_out, (d_in, d_out)), requires_grad=True)
        self.bias = Tensor(np.zeros(d_out), requires_grad=True)

    def params(self) -> list[tuple[str, Tensor]]:
        return [(f"{self.name}.weight", self.weight), (f"{self.name}.bias", self.bias)]

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class Conv1d:
    """1-D convolution over the time axis with same zero padding.

    The kernel has shape (kernel_size, c_in, c_out) and the kernel size
    must be odd so the output aligns with the input steps.  Implemented
    as kernel_size shifted matmuls, which keeps the backward pass inside
    the autograd primitives.
    """

    def __init__(
        self,
        c_in: int,
        c_out: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        name: str = "conv",
    ):
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError(f"kernel size must be odd and positive, got {kernel_size}")
        self.name = name
        self.kernel_size = kernel_size
        fan_in = kernel_size * c_in
        fan_out = kernel_size * c_out
        self.kernel = Tensor(
            glorot_uniform(rng, fan_in, fan_out, (kernel_size, c_in, c_out)), requires_grad=True
        )
        self.bias = Tensor(np.zeros(c_out), requires_grad=True)

    def params(self) -> list[tuple[str, Tensor]]:
        return [(f"{self.name}.kernel", self.kernel), (f"{self.name}.bias", self.bias)]

    def __call__(self, x: Tensor) -> Tensor:
        steps = x.shape[1]
        half = self.kernel_size // 2
        padded = x.pad_axis(1, half, half)
        out = None
        for j in range(self.kernel_size):
            term = padded[:, j : j + steps, :] @ self.kernel[j]
            out = term if out is None else out + term
        return out + self.bias


class LayerNorm:
    """Normalization over the last axis with learned gain and offset.

    Uses the population variance of each row and epsilon inside the root.
    """

    def __init__(self, width: int, eps: float = 1e-5, name: str = "norm"):
        self.name = name
        self.eps = eps
        self.gain = Tensor(np.ones(width), requires_grad=True)
        self.offset = Tensor(np.zeros(width), requires_grad=True)

    def params(self) -> list[tuple[str, Tensor]]:
        return [(f"{self.name}.gain", self.gain), (f"{self.name}.offset", self.offset)]

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered / (var + self.eps).sqrt() * self.gain + self.offset


def softmax_last(x: Tensor) -> Tensor:
    """Softmax along the last axis, stabilized by the detached row max."""
    shift = Tensor(x.data.max(axis=-1, keepdims=True))
    e = (x - shift).exp()
    return e / e.sum(axis=-1, keepdims=True)


class MultiHeadSelfAttention:
    """Scaled dot-product self-attention with per-head splits.

    Query, key, value, and output projections are square maps of the
    model width; scores are scaled by 1/sqrt(head width) and softmaxed
    over keys.
    """

    def __init__(self, width: int, heads: int, rng: np.random.Generator, name: str = "attn"):
        if width % heads != 0:
            raise ValueError(f"width {width} is not divisible by {heads} heads")
        self.width = width
        self.heads = heads
        self.head_width = width // heads
        self.query = Dense(width, width, rng, name=f"{name}.query")
        self.key = Dense(width, width, rng, name=f"{name}.key")
        self.value = Dense(width, width, rng, name=f"{name}.value")
        self.out = Dense(width, width, rng, name=f"{name}.out")

    def params(self) -> list[tuple[str, Tensor]]:
        return self.query.params() + self.key.params() + self.value.params() + self.out.params()

    def _split(self, x: Tensor, batch: int, steps: int) -> Tensor:
        return x.reshape(batch, steps, self.heads, self.head_width).transpose(0, 2, 1, 3)

    def __call__(self, x: Tensor) -> Tensor:
        batch, steps, _ = x.shape
        q = self._split(self.query(x), batch, steps)
        k = self._split(self.key(x), batch, steps)
        v = self._split(self.value(x), batch, steps)
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(self.head_width))
        weights = softmax_last(scores)
        mixed = (weights @ v).transpose(0, 2, 1, 3).reshape(batch, steps, self.width)
        return self.out(mixed)

    def attention_weights(self, x: Tensor | np.ndarray) -> np.ndarray:
        """Softmax weights (batch, heads, steps, steps) for inspection."""
        with no_grad():
            x = x if isinstance(x, Tensor) else Tensor(x)
            batch, steps, _ = x.shape
            q = self._split(self.query(x), batch, steps)
            k = self._split(self.key(x), batch, steps)
            scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(self.head_width))
            return softmax_last(scores).data


def positional_encoding(steps: int, width: int) -> np.ndarray:
    """Sinusoidal position code: sin on even columns, cos on odd ones.

    Column pair 2i uses wavelength 10000^(2i/width); the code is fixed,
    not learned.
    """
    position = np.arange(steps, dtype=np.float64)[:, None]
    pair = np.arange(0, width, 2, dtype=np.float64)[None, :]
    angle = position / np.power(10000.0, pair / width)
    code = np.zeros((steps, width))
    code[:, 0::2] = np.sin(angle)
    code[:, 1::2] = np.cos(angle[:, : width // 2])
    return code


def lstm_cell(
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    wx: Tensor,
    wh: Tensor,
    bias: Tensor,
    width: int,
) -> tuple[Tensor, Tensor]:
    """One LSTM step with fused gate weights in (input, forget, cell, output) order."""
    z = x @ wx + h_prev @ wh + bias
    i = z[:, :width].sigmoid()
    f = z[:, width : 2 * width].sigmoid()
    g = z[:, 2 * width : 3 * width].tanh()
    o = z[:, 3 * width :].sigmoid()
    c = f * c_prev + i * g
    h = o * c.tanh()
    return h, c


class Lstm:
    """Single-layer LSTM that folds a sequence into its final hidden state.

    The same fused weights are reused at every step; the forget-gate bias
    starts at one so early training does not wash out the cell state.
    """

    def __init__(self, d_in: int, width: int, rng: np.random.Generator, name: str = "lstm"):
        self.name = name
        self.width = width
        self.wx = Tensor(glorot_uniform(rng, d_in, 4 * width, (d_in, 4 * width)), requires_grad=True)
        self.wh = Tensor(glorot_uniform(rng, width, 4 * width, (width, 4 * width)), requires_grad=True)
        bias = np.zeros(4 * width)
        bias[width : 2 * width] = 1.0
        self.bias = Tensor(bias, requires_grad=True)

    def params(self) -> list[tuple[str, Tensor]]:
        return [
            (f"{self.name}.wx", self.wx),
            (f"{self.name}.wh", self.wh),
            (f"{self.name}.bias", self.bias),
        ]

    def __call__(self, x: Tensor) -> Tensor:
        batch, steps, _ = x.shape
        h = Tensor(np.zeros((batch, self.width)))
        c = Tensor(np.zeros((batch, self.width)))
        for t in range(steps):
            h, c = lstm_cell(x[:, t, :], h, c, self.wx, self.wh, self.bias, self.width)
        return h


def rmse_loss(pred: Tensor, target: Tensor | np.ndarray, eps: float = 1e-12) -> Tensor:
    """Root-mean-square error over every entry, guarded inside the root."""
    target = target if isinstance(target, Tensor) else Tensor(target)
    diff = pred - target
    return ((diff * diff).mean() + eps).sqrt()
