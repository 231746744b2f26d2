"""From-scratch neural network core: autograd tensor, layers, Adam, checks."""

from .autograd import Tensor, no_grad
from .gradcheck import GradCheckReport, finite_difference_check, relative_error
from .layers import (
    Conv1d,
    Dense,
    LayerNorm,
    Lstm,
    MultiHeadSelfAttention,
    glorot_uniform,
    lstm_cell,
    positional_encoding,
    rmse_loss,
    softmax_last,
)
from .optim import Adam

__all__ = [
    "Adam",
    "Conv1d",
    "Dense",
    "GradCheckReport",
    "LayerNorm",
    "Lstm",
    "MultiHeadSelfAttention",
    "Tensor",
    "finite_difference_check",
    "glorot_uniform",
    "lstm_cell",
    "no_grad",
    "positional_encoding",
    "relative_error",
    "rmse_loss",
    "softmax_last",
]
