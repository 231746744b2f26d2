"""Phase control and link-level metrics for the RIS downlink.

The received gain is sum_i h_i g_i exp(j phi_i) + f.  With per-element
phases phi_i = -arg(h_i g_i) every cascaded term turns real positive, the
sum reaches its Cauchy-Schwarz bound sum_i |h_i g_i|, and any other phase
schedule can only do worse on the same realization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("optimal-csi", "transformer", "lstm", "dnn", "fixed-phase", "no-ris")
PREDICTOR_SCHEMES = ("transformer", "lstm", "dnn")


@dataclass(frozen=True)
class RadioConfig:
    """Transmit and noise powers plus the SNR target.

    Transmit power is in dBm, noise power in dBW (so 30 dBm and 0 dBW are
    the same watt), and gamma_threshold is linear.
    """

    transmit_power_dbm: float = 30.0
    noise_power_dbw: float = -100.0
    gamma_threshold: float = 1.0


def dbm_to_watts(power_dbm: float) -> float:
    return float(10.0 ** ((power_dbm - 30.0) / 10.0))


def dbw_to_watts(power_dbw: float) -> float:
    return float(10.0 ** (power_dbw / 10.0))


def wrap_phase(phi: np.ndarray) -> np.ndarray:
    """Wrap angles into [-pi, pi)."""
    return (np.asarray(phi) + np.pi) % (2.0 * np.pi) - np.pi


def optimal_phases(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Per-element phases aligning every cascaded path, phi = -arg(h g).

    A zero product has undefined phase and contributes nothing to the
    gain; it gets phase zero.  Works on any matching leading shape with
    elements along the last axis.
    """
    prod = np.asarray(h) * np.asarray(g)
    return wrap_phase(-np.angle(prod))


def effective_gain(
    f: np.ndarray | complex,
    h: np.ndarray,
    g: np.ndarray,
    phases: np.ndarray | None,
) -> np.ndarray:
    """Composite channel sum_i h_i g_i exp(j phi_i) + f.

    ``phases=None`` means the surface is absent and only the direct link
    remains.  Leading shapes broadcast; elements run along the last axis.
    """
    if phases is None:
        return np.asarray(f, dtype=np.complex128)
    h = np.asarray(h)
    g = np.asarray(g)
    phases = np.asarray(phases)
    if h.shape != g.shape or phases.shape[-1] != h.shape[-1]:
        raise ValueError(f"shape mismatch: h {h.shape}, g {g.shape}, phases {phases.shape}")
    return np.sum(h * g * np.exp(1j * phases), axis=-1) + np.asarray(f)


def scheme_phases(scheme: str, h: np.ndarray | None, g: np.ndarray | None) -> np.ndarray | None:
    """Phase schedule for a scheme given its view of the CSI.

    The predictor schemes apply the same closed form as optimal-csi; they
    differ only in where (h, g) come from.  fixed-phase keeps all
    elements at zero and no-ris removes the surface entirely.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    if scheme == "no-ris":
        return None
    if scheme == "fixed-phase":
        return np.zeros_like(np.asarray(h), dtype=np.float64)
    return optimal_phases(h, g)


def snr(gain: np.ndarray | complex, radio: RadioConfig) -> np.ndarray:
    """Instantaneous SNR |gain|^2 P / N0 on a linear scale."""
    p_watts = dbm_to_watts(radio.transmit_power_dbm)
    n0_watts = dbw_to_watts(radio.noise_power_dbw)
    return np.abs(np.asarray(gain)) ** 2 * p_watts / n0_watts


def outage_probability(snr_samples: np.ndarray, gamma_threshold: float) -> float:
    """Fraction of samples strictly below the SNR target."""
    snr_samples = np.asarray(snr_samples)
    if snr_samples.size == 0:
        raise ValueError("outage over an empty sample set is undefined")
    if gamma_threshold <= 0:
        raise ValueError(f"gamma threshold must be positive, got {gamma_threshold}")
    return float(np.mean(snr_samples < gamma_threshold))


def achievable_rate(outage: float, gamma_threshold: float) -> float:
    """Outage-discounted rate (1 - P_out) log2(1 + gamma_th), bits/s/Hz."""
    if not 0.0 <= outage <= 1.0:
        raise ValueError(f"outage must lie in [0, 1], got {outage}")
    if gamma_threshold <= 0:
        raise ValueError(f"gamma threshold must be positive, got {gamma_threshold}")
    return float((1.0 - outage) * np.log2(1.0 + gamma_threshold))


def rayleigh_outage_closed_form(radio: RadioConfig, variance_db: float) -> float:
    """Exact outage of a direct-only Rayleigh link with the given variance.

    |f|^2 is exponential with mean equal to the channel variance, so
    P_out = 1 - exp(-gamma_th N0 / (P L)).  Used as an analytic reference
    for the Monte Carlo path.
    """
    p_watts = dbm_to_watts(radio.transmit_power_dbm)
    n0_watts = dbw_to_watts(radio.noise_power_dbw)
    variance = 10.0 ** (variance_db / 10.0)
    return float(1.0 - np.exp(-radio.gamma_threshold * n0_watts / (p_watts * variance)))
