"""Monte Carlo outage and rate sweeps over the six operating schemes.

Every scheme is scored on the same channel realizations (common random
numbers), and transmit power only rescales the SNR, so one pool of
composite gains per element count serves the whole power grid.  Per
Monte Carlo iteration a fresh correlated segment is drawn; the first W
samples only warm up the predictors and the remaining segment_length
samples are evaluated.  Prediction error enters purely through the
phases: the SNR always uses the true (h, g, f).
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm as _norm

from . import channel, link
from .models import TrainedModel, hash_seed, predict_batch

CHUNK_SEGMENTS = 200


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a sweep needs besides the trained predictors."""

    geometry: channel.LinkGeometry = field(default_factory=channel.LinkGeometry)
    noise_dbw: float = -100.0
    gamma_threshold: float = 1.0
    powers_dbm: tuple[float, ...] = tuple(float(p) for p in range(0, 51, 2))
    n_list: tuple[int, ...] = (4, 8, 12, 16, 20)
    element_sweep_power_dbm: float = 30.0
    iterations: int = 2000
    segment_length: int = 50
    window: int = 10
    normalized_doppler: float = 0.01
    filter_length: int = 64
    filter_window: str = "hamming"
    seeds: tuple[int, ...] = (11, 12, 13)
    direct_link: bool = True

    def correlation_filter(self) -> channel.CorrelationFilter:
        return channel.build_correlation_filter(
            self.normalized_doppler, self.filter_length, self.filter_window
        )


@dataclass(frozen=True)
class SweepRow:
    """One aggregated operating point."""

    scheme: str
    n_elements: int
    power_dbm: float
    outage: float
    outage_lo: float
    outage_hi: float
    rate: float
    samples: int
    seeds: tuple[int, ...]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError(f"trials must be positive, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = float(_norm.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * np.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    # the edges are exact in exact arithmetic; snap them so the interval
    # always contains the point estimate
    lo = 0.0 if successes == 0 else max(0.0, float(center - half))
    hi = 1.0 if successes == trials else min(1.0, float(center + half))
    return (lo, hi)


def _segment_gains_sq(
    scenario: ScenarioConfig,
    n_elements: int,
    models: dict[str, TrainedModel],
    seed: int,
    segment_indices: range,
) -> dict[str, np.ndarray]:
    """|composite gain|^2 per scheme for a block of segments.

    Output arrays are aligned sample for sample across schemes, which is
    what makes paired comparisons and common-random-number sweeps valid.
    """
    filt = scenario.correlation_filter()
    window = scenario.window
    seg = scenario.segment_length
    draw = window + seg
    count = len(segment_indices)

    f_all = np.empty((count, seg), dtype=np.complex128)
    h_all = np.empty((count, seg, n_elements), dtype=np.complex128)
    g_all = np.empty((count, seg, n_elements), dtype=np.complex128)
    raw_windows = np.empty((count, seg, window, 4 * n_elements))
    for row, index in enumerate(segment_indices):
        series = channel.generate_channel_series(
            scenario.geometry, n_elements, draw, filt, seed=hash_seed(seed, index)
        )
        f_all[row] = series.f[window:]
        h_all[row] = series.h[window:]
        g_all[row] = series.g[window:]
        matrix = channel.to_feature_matrix(series)
        starts = np.arange(seg)[:, None] + np.arange(window)[None, :]
        raw_windows[row] = matrix[starts]
    if not scenario.direct_link:
        f_all = np.zeros_like(f_all)

    flat_f = f_all.reshape(-1)
    flat_h = h_all.reshape(-1, n_elements)
    flat_g = g_all.reshape(-1, n_elements)
    flat_windows = raw_windows.reshape(-1, window, 4 * n_elements)

    gains_sq: dict[str, np.ndarray] = {}
    for scheme in ("optimal-csi", "fixed-phase", "no-ris"):
        phases = link.scheme_phases(scheme, flat_h, flat_g)
        gain = link.effective_gain(flat_f, flat_h, flat_g, phases)
        gains_sq[scheme] = np.abs(gain) ** 2
    for scheme, trained in models.items():
        if scheme not in link.PREDICTOR_SCHEMES:
            raise ValueError(f"{scheme!r} is not a predictor scheme")
        normalized = channel.normalize(flat_windows, trained.stats)
        predicted = channel.denormalize(predict_batch(trained, normalized), trained.stats)
        h_hat, g_hat = channel.features_to_channels(predicted, n_elements)
        phases = link.optimal_phases(h_hat, g_hat)
        gain = link.effective_gain(flat_f, flat_h, flat_g, phases)
        gains_sq[scheme] = np.abs(gain) ** 2
    return gains_sq


def _chunk_worker(args) -> tuple[int, dict[str, np.ndarray]]:
    chunk_id, scenario, n_elements, models, seed, indices = args
    return chunk_id, _segment_gains_sq(scenario, n_elements, models, seed, indices)


def collect_gains_sq(
    scenario: ScenarioConfig,
    n_elements: int,
    models: dict[str, TrainedModel],
    jobs: int = 1,
) -> dict[str, np.ndarray]:
    """Pool of squared composite gains per scheme over the full seed set.

    The pool holds iterations * segment_length samples per seed, in a
    fixed order independent of ``jobs``.
    """
    tasks = []
    chunk_id = 0
    for seed in scenario.seeds:
        for start in range(0, scenario.iterations, CHUNK_SEGMENTS):
            stop = min(start + CHUNK_SEGMENTS, scenario.iterations)
            tasks.append((chunk_id, scenario, n_elements, models, seed, range(start, stop)))
            chunk_id += 1
    if jobs <= 1 or len(tasks) == 1:
        results = [_chunk_worker(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_chunk_worker, tasks))
    results.sort(key=lambda item: item[0])
    schemes = list(results[0][1])
    return {s: np.concatenate([part[s] for _, part in results]) for s in schemes}


def _rows_for_powers(
    gains_sq: dict[str, np.ndarray],
    scenario: ScenarioConfig,
    n_elements: int,
    powers_dbm: tuple[float, ...],
    confidence: float,
) -> list[SweepRow]:
    n0 = link.dbw_to_watts(scenario.noise_dbw)
    rows = []
    for scheme in link.SCHEMES:
        if scheme not in gains_sq:
            continue
        pool = gains_sq[scheme]
        for power in powers_dbm:
            snr = pool * (link.dbm_to_watts(power) / n0)
            failures = int(np.sum(snr < scenario.gamma_threshold))
            outage = failures / snr.size
            lo, hi = wilson_interval(failures, snr.size, confidence)
            rows.append(
                SweepRow(
                    scheme=scheme,
                    n_elements=n_elements,
                    power_dbm=float(power),
                    outage=outage,
                    outage_lo=lo,
                    outage_hi=hi,
                    rate=link.achievable_rate(outage, scenario.gamma_threshold),
                    samples=int(snr.size),
                    seeds=tuple(scenario.seeds),
                )
            )
    return rows


def run_power_sweep(
    scenario: ScenarioConfig,
    n_elements: int,
    models: dict[str, TrainedModel],
    jobs: int = 1,
    confidence: float = 0.95,
) -> list[SweepRow]:
    """Outage and rate over the power grid at a fixed element count."""
    gains_sq = collect_gains_sq(scenario, n_elements, models, jobs=jobs)
    return _rows_for_powers(gains_sq, scenario, n_elements, scenario.powers_dbm, confidence)


def run_element_sweep(
    scenario: ScenarioConfig,
    models_by_n: dict[int, dict[str, TrainedModel]],
    jobs: int = 1,
    confidence: float = 0.95,
) -> list[SweepRow]:
    """Outage and rate over the element counts at the fixed sweep power."""
    rows: list[SweepRow] = []
    for n_elements in scenario.n_list:
        gains_sq = collect_gains_sq(scenario, n_elements, models_by_n.get(n_elements, {}), jobs=jobs)
        rows.extend(
            _rows_for_powers(
                gains_sq, scenario, n_elements, (scenario.element_sweep_power_dbm,), confidence
            )
        )
    return rows


# --- result files ---------------------------------------------------------

SWEEP_COLUMNS = (
    "scheme",
    "n_elements",
    "power_dbm",
    "outage",
    "outage_lo",
    "outage_hi",
    "rate",
    "samples",
    "seeds",
)


def write_sweep_csv(path: str | Path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.scheme,
                    row.n_elements,
                    repr(float(row.power_dbm)),
                    repr(float(row.outage)),
                    repr(float(row.outage_lo)),
                    repr(float(row.outage_hi)),
                    repr(float(row.rate)),
                    row.samples,
                    ";".join(str(s) for s in row.seeds),
                ]
            )


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SWEEP_COLUMNS:
            raise ValueError(f"{path} does not look like a sweep CSV (header {header})")
        for record in reader:
            rows.append(
                SweepRow(
                    scheme=record[0],
                    n_elements=int(record[1]),
                    power_dbm=float(record[2]),
                    outage=float(record[3]),
                    outage_lo=float(record[4]),
                    outage_hi=float(record[5]),
                    rate=float(record[6]),
                    samples=int(record[7]),
                    seeds=tuple(int(s) for s in record[8].split(";")),
                )
            )
    return rows
