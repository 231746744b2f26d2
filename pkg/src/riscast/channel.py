"""Time-correlated Rayleigh channel generation for a RIS-assisted downlink.

One base station talks to one user over a direct path and through a
reconfigurable intelligent surface with N passive elements, so a scenario
involves 2N + 1 scalar channels: the direct link f, the N base-to-surface
links h_i, and the N surface-to-user links g_i.  All of them are
circularly-symmetric complex Gaussian with a variance set by a
log-distance path-loss law, and all evolve in time as low-pass filtered
white noise.

Conventions used throughout:
  * complex128 / float64 everywhere, no single precision
  * path loss is expressed as the channel variance in dB (negative values,
    anchored at the reference loss for the reference distance)
  * the feature layout for learning is [Re h_1..N, Im h_1..N,
    Re g_1..N, Im g_1..N], giving 4N features per time step; the direct
    link is not a feature
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import j0

from .errors import DegenerateFeatureError, InsufficientDataError, InvalidGeometryError
from .seeding import as_generator, derive_rng

LINKS = ("bs_ris", "ris_ue", "bs_ue")

FILTER_WINDOWS = {
    "hann": np.hanning,
    "hamming": np.hamming,
    "blackman": np.blackman,
    "rect": np.ones,
}


@dataclass(frozen=True)
class LinkGeometry:
    """Distances (m) and path-loss exponents for the three links."""

    d_bs_ris: float = 38.0
    d_ris_ue: float = 5.0
    d_bs_ue: float = 40.0
    eta_bs_ris: float = 2.2
    eta_ris_ue: float = 2.2
    eta_bs_ue: float = 4.2
    ref_loss_db: float = -30.0
    ref_distance: float = 1.0


def path_loss_db(geometry: LinkGeometry, link: str) -> float:
    """Channel variance in dB for one link of the geometry.

    The variance equals the reference loss at the reference distance and
    falls off by 10*eta decades per decade of distance beyond it.
    """
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}, expected one of {LINKS}")
    if geometry.ref_distance <= 0:
        raise InvalidGeometryError(f"reference distance must be positive, got {geometry.ref_distance}")
    distance = {
        "bs_ris": geometry.d_bs_ris,
        "ris_ue": geometry.d_ris_ue,
        "bs_ue": geometry.d_bs_ue,
    }[link]
    eta = {
        "bs_ris": geometry.eta_bs_ris,
        "ris_ue": geometry.eta_ris_ue,
        "bs_ue": geometry.eta_bs_ue,
    }[link]
    if distance <= 0:
        raise InvalidGeometryError(f"distance for {link} must be positive, got {distance}")
    return geometry.ref_loss_db - 10.0 * eta * np.log10(distance / geometry.ref_distance)


def path_loss_linear(geometry: LinkGeometry, link: str) -> float:
    """Channel variance on a linear scale."""
    return float(10.0 ** (path_loss_db(geometry, link) / 10.0))


def sample_uncorrelated(count: int, rng: int | np.random.Generator) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian draws.

    E[z] = 0 and E[|z|^2] = 1, half the power in each quadrature.
    """
    if count <= 0:
        raise ValueError(f"sample count must be positive, got {count}")
    gen = as_generator(rng)
    z = gen.standard_normal(count) + 1j * gen.standard_normal(count)
    return z / np.sqrt(2.0)


@dataclass(frozen=True)
class CorrelationFilter:
    """Unit-energy FIR filter imposing Doppler-style time correlation."""

    taps: np.ndarray
    normalized_doppler: float
    window: str

    def __len__(self) -> int:
        return len(self.taps)


def build_correlation_filter(
    normalized_doppler: float = 0.01,
    length: int = 64,
    window: str = "hamming",
) -> CorrelationFilter:
    """FIR whose taps trace the Clarke autocorrelation J0(2 pi f_D k).

    The raw Bessel samples are shaped by a tapering window and
    renormalized to unit energy so filtering preserves the marginal
    variance.  A length of one degenerates to the identity filter.
    """
    if not 0.0 < normalized_doppler <= 0.5:
        raise ValueError(f"normalized Doppler must lie in (0, 0.5], got {normalized_doppler}")
    if length < 1:
        raise ValueError(f"filter length must be at least 1, got {length}")
    if window not in FILTER_WINDOWS:
        raise ValueError(f"unknown window {window!r}, expected one of {sorted(FILTER_WINDOWS)}")
    k = np.arange(length, dtype=np.float64)
    taps = j0(2.0 * np.pi * normalized_doppler * k) * FILTER_WINDOWS[window](length)
    energy = np.sum(taps**2)
    if energy <= 0.0:
        raise ValueError(f"window {window!r} at length {length} leaves no filter energy")
    taps = taps / np.sqrt(energy)
    return CorrelationFilter(taps=taps, normalized_doppler=normalized_doppler, window=window)


def correlate(samples: np.ndarray, filt: CorrelationFilter) -> np.ndarray:
    """Causal convolution of complex samples with the filter taps.

    Zero initial state; the output has the same length as the input, so
    the first len(filt) - 1 samples are still ramping up.  Accepts a 1-D
    series or a stack of series along the last axis.
    """
    samples = np.asarray(samples)
    taps = filt.taps
    if len(taps) == 1:
        return samples * taps[0]
    shape = [1] * samples.ndim
    shape[-1] = len(taps)
    out = fftconvolve(samples, taps.reshape(shape), mode="full", axes=-1)
    return out[..., : samples.shape[-1]]


@dataclass(frozen=True)
class ChannelSeries:
    """Correlated channel realizations for one scenario.

    f is (T,), h and g are (T, N); h[t, i] is the base-to-surface channel
    of element i at step t.
    """

    f: np.ndarray
    h: np.ndarray
    g: np.ndarray

    @property
    def length(self) -> int:
        return self.f.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h.shape[1]


def generate_channel_series(
    geometry: LinkGeometry,
    n_elements: int,
    length: int,
    filt: CorrelationFilter,
    seed: int,
) -> ChannelSeries:
    """Draw 2N + 1 independent correlated channel processes.

    Each process gets its own derived random stream, is filtered, has the
    first len(filt) warm-up samples discarded, and is scaled to the
    variance of its link.  The same (geometry, n, length, filt, seed)
    always reproduces the same series bit for bit.
    """
    if n_elements < 1:
        raise ValueError(f"n_elements must be positive, got {n_elements}")
    if length < 1:
        raise ValueError(f"series length must be positive, got {length}")
    warmup = len(filt)
    total = length + warmup
    streams = np.empty((2 * n_elements + 1, total), dtype=np.complex128)
    for idx in range(streams.shape[0]):
        streams[idx] = sample_uncorrelated(total, derive_rng(seed, idx))
    corr = correlate(streams, filt)[:, warmup:]
    scale_f = np.sqrt(path_loss_linear(geometry, "bs_ue"))
    scale_h = np.sqrt(path_loss_linear(geometry, "bs_ris"))
    scale_g = np.sqrt(path_loss_linear(geometry, "ris_ue"))
    f = corr[0] * scale_f
    h = (corr[1 : n_elements + 1] * scale_h).T.copy()
    g = (corr[n_elements + 1 :] * scale_g).T.copy()
    return ChannelSeries(f=f, h=h, g=g)


# --- feature layout -------------------------------------------------------


def to_feature_matrix(series: ChannelSeries) -> np.ndarray:
    """Stack the RIS channels as a (T, 4N) real feature matrix."""
    return np.hstack([series.h.real, series.h.imag, series.g.real, series.g.imag])


def features_to_channels(features: np.ndarray, n_elements: int) -> tuple[np.ndarray, np.ndarray]:
    """Invert the feature layout back to complex (h, g) arrays.

    Accepts any leading shape; the last axis must hold 4N features.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != 4 * n_elements:
        raise ValueError(
            f"feature axis has {features.shape[-1]} entries, expected {4 * n_elements} for N={n_elements}"
        )
    n = n_elements
    h = features[..., :n] + 1j * features[..., n : 2 * n]
    g = features[..., 2 * n : 3 * n] + 1j * features[..., 3 * n :]
    return h, g


def feature_names(n_elements: int) -> list[str]:
    """Column names matching the feature layout."""
    idx = range(1, n_elements + 1)
    return (
        [f"h_re_{i}" for i in idx]
        + [f"h_im_{i}" for i in idx]
        + [f"g_re_{i}" for i in idx]
        + [f"g_im_{i}" for i in idx]
    )


# --- normalization --------------------------------------------------------


@dataclass(frozen=True)
class NormStats:
    """Per-feature affine scaling: normalized = (x - offset) / scale."""

    offset: np.ndarray
    scale: np.ndarray


def compute_norm_stats(matrix: np.ndarray) -> NormStats:
    """Per-column min and range of a feature matrix.

    Normalizing with these maps the fitting rows into [0, 1]; rows seen
    later land wherever the affine map puts them.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows to estimate statistics")
    lo = matrix.min(axis=0)
    span = matrix.max(axis=0) - lo
    flat = np.flatnonzero(span == 0.0)
    if flat.size:
        raise DegenerateFeatureError(f"feature column {flat[0]} has zero range")
    return NormStats(offset=lo, scale=span)


def normalize(matrix: np.ndarray, stats: NormStats) -> np.ndarray:
    """Apply the per-feature affine map with precomputed statistics."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] != stats.offset.shape[0]:
        raise ValueError(f"matrix has {matrix.shape[-1]} features, stats cover {stats.offset.shape[0]}")
    return (matrix - stats.offset) / stats.scale


def denormalize(matrix: np.ndarray, stats: NormStats) -> np.ndarray:
    """Undo :func:`normalize`."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] != stats.offset.shape[0]:
        raise ValueError(f"matrix has {matrix.shape[-1]} features, stats cover {stats.offset.shape[0]}")
    return matrix * stats.scale + stats.offset


# --- windowing ------------------------------------------------------------


@dataclass
class WindowedDataset:
    """Sliding windows paired with next-step targets.

    inputs is (P, W, F) and targets is (P, F) with P = T - W; pair k sees
    rows [k, k + W) and predicts row k + W.  The first n_train pairs are
    the training split, the rest validate; splits are chronological.
    """

    inputs: np.ndarray
    targets: np.ndarray
    window: int
    n_train: int
    stats: NormStats | None = None

    @property
    def n_pairs(self) -> int:
        return self.inputs.shape[0]

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[: self.n_train]

    @property
    def train_targets(self) -> np.ndarray:
        return self.targets[: self.n_train]

    @property
    def val_inputs(self) -> np.ndarray:
        return self.inputs[self.n_train :]

    @property
    def val_targets(self) -> np.ndarray:
        return self.targets[self.n_train :]


def windowize(matrix: np.ndarray, window: int, train_fraction: float = 0.8) -> WindowedDataset:
    """Cut a feature matrix into overlapping windows and next-step targets."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if window < 1:
        raise ValueError(f"window must be positive, got {window}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must lie in (0, 1), got {train_fraction}")
    n_pairs = matrix.shape[0] - window
    if n_pairs < 2:
        raise InsufficientDataError(
            f"{matrix.shape[0]} rows with window {window} leave {max(n_pairs, 0)} pairs, need at least 2"
        )
    starts = np.arange(n_pairs)[:, None] + np.arange(window)[None, :]
    inputs = matrix[starts]
    targets = matrix[window:]
    n_train = int(np.floor(train_fraction * n_pairs))
    if n_train < 1 or n_train >= n_pairs:
        raise InsufficientDataError(f"split of {n_pairs} pairs at fraction {train_fraction} leaves an empty side")
    return WindowedDataset(inputs=inputs, targets=targets, window=window, n_train=n_train)


def prepare_dataset(matrix: np.ndarray, window: int, train_fraction: float = 0.8) -> WindowedDataset:
    """Scale a raw feature matrix per feature into [0, 1] and window it.

    Statistics come from the rows the training pairs touch, never from
    validation rows, so the validation split stays honest.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    probe = windowize(matrix, window, train_fraction)
    stats = compute_norm_stats(matrix[: probe.n_train + window])
    ds = windowize(normalize(matrix, stats), window, train_fraction)
    ds.stats = stats
    return ds


# --- dataset files --------------------------------------------------------

META_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetMeta:
    """Sidecar metadata that makes a dataset file reproducible."""

    seed: int
    n_elements: int
    length: int
    window: int
    train_fraction: float
    normalized_doppler: float
    filter_length: int
    filter_window: str
    geometry: LinkGeometry = field(default_factory=LinkGeometry)
    stats: NormStats | None = None


def write_dataset_csv(path: str | Path, matrix: np.ndarray, n_elements: int) -> None:
    """Write the feature matrix as CSV with named columns, full precision."""
    matrix = np.asarray(matrix, dtype=np.float64)
    names = feature_names(n_elements)
    if matrix.shape[1] != len(names):
        raise ValueError(f"matrix has {matrix.shape[1]} columns, expected {len(names)} for N={n_elements}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def read_dataset_csv(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a dataset CSV back into (matrix, n_elements)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    n_elements = sum(1 for name in header if name.startswith("h_re_"))
    if n_elements == 0 or len(header) != 4 * n_elements:
        raise ValueError(f"{path} does not look like a channel feature CSV")
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.shape[1] != len(header):
        raise ValueError(f"{path} rows disagree with the header width")
    return matrix, n_elements


def write_dataset_meta(path: str | Path, meta: DatasetMeta) -> None:
    doc = {
        "format_version": META_FORMAT_VERSION,
        "seed": meta.seed,
        "n_elements": meta.n_elements,
        "length": meta.length,
        "window": meta.window,
        "train_fraction": meta.train_fraction,
        "normalized_doppler": meta.normalized_doppler,
        "filter_length": meta.filter_length,
        "filter_window": meta.filter_window,
        "geometry": asdict(meta.geometry),
        "stats": None
        if meta.stats is None
        else {"offset": meta.stats.offset.tolist(), "scale": meta.stats.scale.tolist()},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_dataset_meta(path: str | Path) -> DatasetMeta:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != META_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported metadata format {doc.get('format_version')!r}")
    stats = doc.get("stats")
    return DatasetMeta(
        seed=doc["seed"],
        n_elements=doc["n_elements"],
        length=doc["length"],
        window=doc["window"],
        train_fraction=doc["train_fraction"],
        normalized_doppler=doc["normalized_doppler"],
        filter_length=doc["filter_length"],
        filter_window=doc["filter_window"],
        geometry=LinkGeometry(**doc["geometry"]),
        stats=None
        if stats is None
        else NormStats(offset=np.asarray(stats["offset"]), scale=np.asarray(stats["scale"])),
    )
