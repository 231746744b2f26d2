"""Next-step CSI predictors: a feedforward net, an LSTM, and a transformer.

All three consume a window of W normalized feature rows and emit the
next row.  The feedforward net only looks at the most recent row; the
LSTM folds the window through its recurrence; the transformer encodes
the whole window with self-attention and a convolutional feedforward
block, then reads the final position.  Training is plain Adam on an RMSE
loss, fixed epoch budget, no early stopping; the validation split is
monitored but never steers anything.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import channel
from .errors import CheckpointError, ConfigError, DivergenceError
from .nn import (
    Adam,
    Conv1d,
    Dense,
    LayerNorm,
    Lstm,
    MultiHeadSelfAttention,
    Tensor,
    no_grad,
    positional_encoding,
    rmse_loss,
)
from .seeding import derive_rng

VARIANTS = ("dnn", "lstm", "transformer")

# Reference layer sizes for the element counts studied in the experiments.
# Off-table sizes follow the same growth pattern.
DNN_HIDDEN = {
    4: (20, 24, 24, 20),
    8: (36, 40, 40, 36),
    12: (52, 56, 56, 52),
    16: (68, 72, 72, 68),
    20: (88, 92, 94, 88),
}
LSTM_SIZES = {4: (22, 18), 8: (44, 36), 12: (60, 56), 16: (76, 68), 20: (100, 90)}
D_MODEL = {4: 24, 8: 48, 12: 60, 16: 80, 20: 120}


def _default_dnn_hidden(n: int) -> tuple[int, int, int, int]:
    f = 4 * n
    return (f + 4, f + 8, f + 8, f + 4)


def _default_lstm_sizes(n: int) -> tuple[int, int]:
    f = 4 * n
    return (max(8, round(1.375 * f)), max(8, round(1.125 * f)))


def _default_d_model(n: int, heads: int) -> int:
    f = 4 * n
    d = max(heads, round(1.5 * f))
    return d + (-d) % heads


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description for one predictor.

    Size fields left at None resolve against the element count through
    the built-in size tables.
    """

    variant: str
    n_elements: int
    window: int = 10
    dnn_hidden: tuple[int, ...] | None = None
    lstm_width: int | None = None
    lstm_fc_width: int | None = None
    d_model: int | None = None
    heads: int = 4
    ff_width: int | None = None
    kernel_size: int = 3

    @property
    def features(self) -> int:
        return 4 * self.n_elements

    def resolved(self) -> "ModelConfig":
        """Fill every size field for the configured element count."""
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.n_elements < 1:
            raise ConfigError(f"n_elements must be positive, got {self.n_elements}")
        if self.window < 1:
            raise ConfigError(f"window must be positive, got {self.window}")
        n = self.n_elements
        out = self
        if out.dnn_hidden is None:
            out = replace(out, dnn_hidden=DNN_HIDDEN.get(n, _default_dnn_hidden(n)))
        if out.lstm_width is None or out.lstm_fc_width is None:
            width, fc = LSTM_SIZES.get(n, _default_lstm_sizes(n))
            out = replace(
                out,
                lstm_width=out.lstm_width if out.lstm_width is not None else width,
                lstm_fc_width=out.lstm_fc_width if out.lstm_fc_width is not None else fc,
            )
        if out.d_model is None:
            out = replace(out, d_model=D_MODEL.get(n, _default_d_model(n, out.heads)))
        if out.ff_width is None:
            out = replace(out, ff_width=out.d_model)
        if out.d_model % out.heads != 0:
            raise ConfigError(f"d_model {out.d_model} is not divisible by {out.heads} heads")
        if len(out.dnn_hidden) != 4:
            raise ConfigError(f"dnn_hidden needs four widths, got {out.dnn_hidden}")
        return out


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; one seed fixes init and batching."""

    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


class DnnPredictor:
    """Four ReLU hidden layers over the most recent window row only."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        widths = (config.features, *config.dnn_hidden, config.features)
        self.layers = [
            Dense(widths[i], widths[i + 1], rng, name=f"fc{i + 1}") for i in range(len(widths) - 1)
        ]

    def named_params(self) -> list[tuple[str, Tensor]]:
        return [pair for layer in self.layers for pair in layer.params()]

    def forward(self, x: Tensor) -> Tensor:
        out = x[:, -1, :]
        for layer in self.layers[:-1]:
            out = layer(out).relu()
        return self.layers[-1](out)


class LstmPredictor:
    """LSTM over the window, then a ReLU layer and a linear readout."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.lstm = Lstm(config.features, config.lstm_width, rng)
        self.fc = Dense(config.lstm_width, config.lstm_fc_width, rng, name="fc")
        self.head = Dense(config.lstm_fc_width, config.features, rng, name="head")

    def named_params(self) -> list[tuple[str, Tensor]]:
        return self.lstm.params() + self.fc.params() + self.head.params()

    def forward(self, x: Tensor) -> Tensor:
        return self.head(self.fc(self.lstm(x)).relu())


class TransformerPredictor:
    """One post-norm encoder block with a convolutional feedforward.

    Embed, add the sinusoidal position code, run multi-head attention
    with a residual into layer norm, then two kernel-3 convolutions with
    a Tanh between them, residual, layer norm, and read the last position
    through a linear head.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        d = config.d_model
        self.embed = Dense(config.features, d, rng, name="embed")
        self.positions = positional_encoding(config.window, d)
        self.attention = MultiHeadSelfAttention(d, config.heads, rng)
        self.norm1 = LayerNorm(d, name="norm1")
        self.conv1 = Conv1d(d, config.ff_width, rng, config.kernel_size, name="conv1")
        self.conv2 = Conv1d(config.ff_width, d, rng, config.kernel_size, name="conv2")
        self.norm2 = LayerNorm(d, name="norm2")
        self.head = Dense(d, config.features, rng, name="head")

    def named_params(self) -> list[tuple[str, Tensor]]:
        return (
            self.embed.params()
            + self.attention.params()
            + self.norm1.params()
            + self.conv1.params()
            + self.conv2.params()
            + self.norm2.params()
            + self.head.params()
        )

    def forward(self, x: Tensor) -> Tensor:
        encoded = self.embed(x) + self.positions
        attended = self.norm1(encoded + self.attention(encoded))
        ff = self.conv2(self.conv1(attended).tanh())
        out = self.norm2(attended + ff)
        return self.head(out[:, -1, :])


Predictor = DnnPredictor | LstmPredictor | TransformerPredictor


def build_model(config: ModelConfig, seed: int) -> Predictor:
    """Deterministically initialize a predictor for (config, seed)."""
    config = config.resolved()
    rng = derive_rng(seed, 0)
    cls = {"dnn": DnnPredictor, "lstm": LstmPredictor, "transformer": TransformerPredictor}[config.variant]
    return cls(config, rng)


def param_count(model: Predictor) -> int:
    return int(sum(t.data.size for _, t in model.named_params()))


def analytic_param_count(config: ModelConfig) -> int:
    """Closed-form parameter total for a config, for cross-checking."""
    config = config.resolved()
    f = config.features
    if config.variant == "dnn":
        widths = (f, *config.dnn_hidden, f)
        return sum(widths[i] * widths[i + 1] + widths[i + 1] for i in range(len(widths) - 1))
    if config.variant == "lstm":
        w, fc = config.lstm_width, config.lstm_fc_width
        lstm = 4 * ((f + w) * w + w)
        return lstm + (w * fc + fc) + (fc * f + f)
    d, ff, k = config.d_model, config.ff_width, config.kernel_size
    embed = f * d + d
    attn = 4 * (d * d + d)
    norms = 2 * (2 * d)
    convs = (k * d * ff + ff) + (k * ff * d + d)
    head = d * f + f
    return embed + attn + norms + convs + head


@dataclass
class TrainedModel:
    """A predictor's weights plus everything needed to use them honestly."""

    config: ModelConfig
    train_config: TrainConfig
    stats: channel.NormStats
    state: dict[str, np.ndarray]
    train_history: list[float]
    val_history: list[float]
    _live: Predictor | None = field(default=None, repr=False, compare=False)

    def model(self) -> Predictor:
        if self._live is None:
            self._live = build_model(self.config, self.train_config.seed)
            apply_state(self._live, self.state)
        return self._live


def snapshot_state(model: Predictor) -> dict[str, np.ndarray]:
    return {name: np.array(t.data, copy=True) for name, t in model.named_params()}


def apply_state(model: Predictor, state: dict[str, np.ndarray]) -> None:
    for name, tensor in model.named_params():
        if name not in state:
            raise CheckpointError(f"checkpoint is missing array {name!r}")
        value = state[name]
        if tuple(value.shape) != tensor.data.shape:
            raise CheckpointError(
                f"array {name!r} has shape {tuple(value.shape)}, model expects {tensor.data.shape}"
            )
        tensor.data = np.array(value, dtype=np.float64, copy=True)


def train_model(
    config: ModelConfig,
    dataset: channel.WindowedDataset,
    train_config: TrainConfig = TrainConfig(),
) -> TrainedModel:
    """Fit a predictor on a prepared dataset.

    The epoch budget is fixed and the validation split is only recorded.
    (seed, config, dataset) fully determine the result, including the
    batch order.  A non-finite loss aborts with the offending epoch.
    """
    config = config.resolved()
    if dataset.stats is None:
        raise ConfigError("dataset has no normalization statistics; build it with prepare_dataset")
    if dataset.inputs.shape[2] != config.features:
        raise ConfigError(
            f"dataset has {dataset.inputs.shape[2]} features, config expects {config.features}"
        )
    if dataset.window != config.window:
        raise ConfigError(f"dataset window {dataset.window} differs from config window {config.window}")
    model = build_model(config, train_config.seed)
    params = [t for _, t in model.named_params()]
    optimizer = Adam(
        params,
        lr=train_config.learning_rate,
        beta1=train_config.beta1,
        beta2=train_config.beta2,
        eps=train_config.eps,
    )
    shuffle_rng = derive_rng(train_config.seed, 1)
    inputs = dataset.train_inputs
    targets = dataset.train_targets
    n_train = inputs.shape[0]
    batch = train_config.batch_size
    train_history: list[float] = []
    val_history: list[float] = []
    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(n_train)
        sse = 0.0
        for start in range(0, n_train, batch):
            pick = order[start : start + batch]
            pred = model.forward(Tensor(inputs[pick]))
            loss = rmse_loss(pred, targets[pick])
            if not np.isfinite(loss.data):
                raise DivergenceError(epoch)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            sse += float(loss.data) ** 2 * pred.data.size
        train_history.append(float(np.sqrt(sse / (n_train * config.features))))
        val_history.append(evaluate_rmse(model, dataset.val_inputs, dataset.val_targets))
    return TrainedModel(
        config=config,
        train_config=train_config,
        stats=dataset.stats,
        state=snapshot_state(model),
        train_history=train_history,
        val_history=val_history,
        _live=model,
    )


def evaluate_rmse(
    model: Predictor,
    inputs: np.ndarray,
    targets: np.ndarray,
    chunk: int = 1024,
) -> float:
    """RMSE of a predictor over a window set, without touching gradients."""
    sse = 0.0
    count = 0
    with no_grad():
        for start in range(0, inputs.shape[0], chunk):
            pred = model.forward(Tensor(inputs[start : start + chunk])).data
            diff = pred - targets[start : start + chunk]
            sse += float(np.sum(diff * diff))
            count += diff.size
    return float(np.sqrt(sse / count))


def predict_batch(trained: TrainedModel, windows: np.ndarray) -> np.ndarray:
    """Normalized next-row predictions for a (B, W, F) stack of windows."""
    model = trained.model()
    with no_grad():
        return model.forward(Tensor(windows)).data


def predict_next(trained: TrainedModel, window: np.ndarray) -> np.ndarray:
    """Denormalized next feature row for one normalized (W, F) window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape != (trained.config.window, trained.config.features):
        raise ValueError(
            f"window shape {window.shape} does not match (W, F) = "
            f"({trained.config.window}, {trained.config.features})"
        )
    pred = predict_batch(trained, window[None])[0]
    return channel.denormalize(pred, trained.stats)


def test_rmse(
    trained: TrainedModel,
    geometry: channel.LinkGeometry,
    filt: channel.CorrelationFilter,
    seed: int,
    segments: int = 40,
    segment_length: int = 50,
) -> float:
    """RMSE on freshly drawn held-out segments, in normalized units.

    Each segment contributes segment_length windows; the channel draws
    are disjoint from any training data by seed derivation.
    """
    config = trained.config
    window = config.window
    model = trained.model()
    sse = 0.0
    count = 0
    for idx in range(segments):
        series = channel.generate_channel_series(
            geometry, config.n_elements, window + segment_length, filt, seed=hash_seed(seed, idx)
        )
        matrix = channel.normalize(channel.to_feature_matrix(series), trained.stats)
        ds_starts = np.arange(segment_length)[:, None] + np.arange(window)[None, :]
        windows = matrix[ds_starts]
        targets = matrix[window:]
        with no_grad():
            pred = model.forward(Tensor(windows)).data
        diff = pred - targets
        sse += float(np.sum(diff * diff))
        count += diff.size
    return float(np.sqrt(sse / count))


def hash_seed(seed: int, index: int) -> int:
    """Stable derived integer seed for an indexed substream."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


# --- checkpoints ----------------------------------------------------------

CHECKPOINT_MAGIC = b"RISCAST1"
CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, trained: TrainedModel) -> None:
    """Single-file checkpoint: JSON header, then named float64 arrays.

    Layout: 8-byte magic, uint64 little-endian header length, UTF-8 JSON
    header, then each array's raw little-endian float64 bytes in header
    order.  The header records config, training settings, normalization
    statistics, history, and array shapes.
    """
    names = sorted(trained.state)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": _config_doc(trained.config),
        "train_config": {
            "epochs": trained.train_config.epochs,
            "batch_size": trained.train_config.batch_size,
            "learning_rate": trained.train_config.learning_rate,
            "beta1": trained.train_config.beta1,
            "beta2": trained.train_config.beta2,
            "eps": trained.train_config.eps,
            "seed": trained.train_config.seed,
        },
        "norm_stats": {
            "offset": trained.stats.offset.tolist(),
            "scale": trained.stats.scale.tolist(),
        },
        "history": {"train": trained.train_history, "val": trained.val_history},
        "arrays": [{"name": n, "shape": list(trained.state[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(np.ascontiguousarray(trained.state[name], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> TrainedModel:
    """Read a checkpoint and validate it against a freshly built model."""
    raw = Path(path).read_bytes()
    if len(raw) < len(CHECKPOINT_MAGIC) + 8 or not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path} is not a riscast checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    (header_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    if offset + header_len > len(raw):
        raise CheckpointError(f"{path} is truncated inside the header")
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} has a corrupt header: {exc}") from exc
    offset += header_len
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported format {header.get('format_version')!r}")
    state: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path} is truncated inside array {entry['name']!r}")
        state[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path} has {len(raw) - offset} trailing bytes")
    config = _config_from_doc(header["config"])
    tc = header["train_config"]
    trained = TrainedModel(
        config=config,
        train_config=TrainConfig(
            epochs=tc["epochs"],
            batch_size=tc["batch_size"],
            learning_rate=tc["learning_rate"],
            beta1=tc["beta1"],
            beta2=tc["beta2"],
            eps=tc["eps"],
            seed=tc["seed"],
        ),
        stats=channel.NormStats(
            offset=np.asarray(header["norm_stats"]["offset"], dtype=np.float64),
            scale=np.asarray(header["norm_stats"]["scale"], dtype=np.float64),
        ),
        state=state,
        train_history=list(header["history"]["train"]),
        val_history=list(header["history"]["val"]),
    )
    trained.model()  # validates array names and shapes eagerly
    return trained


def _config_doc(config: ModelConfig) -> dict:
    return {
        "variant": config.variant,
        "n_elements": config.n_elements,
        "window": config.window,
        "dnn_hidden": list(config.dnn_hidden) if config.dnn_hidden else None,
        "lstm_width": config.lstm_width,
        "lstm_fc_width": config.lstm_fc_width,
        "d_model": config.d_model,
        "heads": config.heads,
        "ff_width": config.ff_width,
        "kernel_size": config.kernel_size,
    }


def _config_from_doc(doc: dict) -> ModelConfig:
    return ModelConfig(
        variant=doc["variant"],
        n_elements=doc["n_elements"],
        window=doc["window"],
        dnn_hidden=tuple(doc["dnn_hidden"]) if doc.get("dnn_hidden") else None,
        lstm_width=doc.get("lstm_width"),
        lstm_fc_width=doc.get("lstm_fc_width"),
        d_model=doc.get("d_model"),
        heads=doc.get("heads", 4),
        ff_width=doc.get("ff_width"),
        kernel_size=doc.get("kernel_size", 3),
    ).resolved()
