"""Analog over-the-air aggregation of normalized gradients.

Every device standardizes its local gradient to zero mean and unit
variance, scales it by a transmit power, and all devices send
simultaneously on the same resource. The PS antenna assigned to
cluster m receives the superposition

    y_m = sum_k sqrt(p_k) * c_{m,k} * g_bar_k + z_m,

with c_{m,k} the cascaded complex gain and z_m circularly symmetric
Gaussian noise. The cluster estimate divides the real part by a
denoising factor and adds back the average of the reported means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .seeding import rng_from_seed

DEGENERATE_STD_TOL = 1e-12


@dataclass(frozen=True)
class NormalizedGradient:
    """Standardized gradient plus the statistics needed to undo it."""

    values: np.ndarray  # (D,)
    mean: float
    std: float


def normalize_gradient(grad: np.ndarray, eps: float = DEGENERATE_STD_TOL) -> NormalizedGradient:
    """Shift to zero mean and scale to unit population variance.

    A gradient whose population std falls below eps is reported as
    degenerate: the normalized vector is all zeros and std is exactly
    0.0, so the device transmits nothing and is reconstructed from its
    mean alone.
    """
    grad = np.asarray(grad, dtype=float)
    if grad.ndim != 1 or grad.size == 0:
        raise ValueError("gradient must be a non-empty 1-D array")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient has non-finite entries")
    mean = float(grad.mean())
    std = float(grad.std())
    if std < eps:
        return NormalizedGradient(values=np.zeros_like(grad), mean=mean, std=0.0)
    return NormalizedGradient(values=(grad - mean) / std, mean=mean, std=std)


def denormalize(ng: NormalizedGradient) -> np.ndarray:
    return ng.std * ng.values + ng.mean


def uplink(
    ch: ChannelSet,
    beta: np.ndarray,
    phases: np.ndarray,
    powers: np.ndarray,
    grads: list[NormalizedGradient],
    noise_var: float,
    noise_seed: int,
) -> np.ndarray:
    """Simultaneous analog transmission of all K normalized gradients.

    Returns the (M, D) complex matrix whose row m is the signal at the
    antenna serving cluster m. Noise entries are i.i.d. circularly
    symmetric complex Gaussian with variance noise_var.
    """
    M, K = ch.num_surfaces, ch.num_devices
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (K,):
        raise ValueError(f"powers must have shape ({K},), got {powers.shape}")
    if (powers < 0).any() or not np.all(np.isfinite(powers)):
        raise ValueError("powers must be finite and non-negative")
    if len(grads) != K:
        raise ValueError(f"expected {K} gradients, got {len(grads)}")
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    D = grads[0].values.shape[0]
    gbar = np.stack([g.values for g in grads], axis=0)  # (K, D)
    if gbar.shape != (K, D):
        raise ValueError("all gradients must share the same dimension")

    phase = np.exp(1j * phases)  # (M, N)
    # gains[k, m] = sum_i beta[i, k] * h_ps[i,:,m]^H diag(phase[i]) h_dev[i,k]
    inner = np.einsum(
        "inm,in,ikn->ikm", np.conj(ch.ris_to_ps), phase, ch.device_to_ris, optimize=True
    )
    gains = np.einsum("ik,ikm->km", beta, inner, optimize=True)  # (K, M) complex

    received = np.einsum("k,km,kd->md", np.sqrt(powers), gains, gbar, optimize=True)
    rng = rng_from_seed(noise_seed)
    noise = rng.standard_normal((M, D)) + 1j * rng.standard_normal((M, D))
    return received + np.sqrt(noise_var / 2.0) * noise


def effective_gains(
    ch: ChannelSet,
    beta: np.ndarray,
    phases: np.ndarray,
    powers: np.ndarray,
    denoisers: np.ndarray,
) -> np.ndarray:
    """Per-entry weight each device contributes to each cluster estimate.

    Entry (m, k) is sqrt(p_k) / lambda_m times the real cascaded gain,
    i.e. the coefficient multiplying g_bar_k inside estimate m.
    """
    from .channel import all_cascaded_gains

    powers = np.asarray(powers, dtype=float)
    denoisers = np.asarray(denoisers, dtype=float)
    if (powers < 0).any():
        raise ValueError("powers must be non-negative")
    if (denoisers <= 0).any() or np.isnan(denoisers).any():
        raise ValueError("denoising factors must be positive")
    gains = all_cascaded_gains(ch, beta, phases)  # (M, K)
    return np.sqrt(powers)[None, :] * gains / denoisers[:, None]


def estimate_cluster_gradient(
    received_row: np.ndarray,
    denoiser: float,
    cluster_means: np.ndarray,
    cluster_size: int,
) -> np.ndarray:
    """Recover a cluster's aggregated gradient from its antenna signal.

    Real part of the received row divided by the denoising factor,
    plus the average of the cluster's reported gradient means on every
    coordinate. An infinite denoiser discards the analog signal and
    keeps the mean term only.
    """
    if not denoiser > 0:
        raise ValueError(f"denoiser must be positive, got {denoiser!r}")
    cluster_means = np.asarray(cluster_means, dtype=float)
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    if cluster_means.shape != (cluster_size,):
        raise ValueError(
            f"expected {cluster_size} reported means, got shape {cluster_means.shape}"
        )
    received_row = np.asarray(received_row)
    mean_term = cluster_means.sum() / cluster_size
    if np.isfinite(denoiser):
        signal = np.real(received_row) / denoiser
    else:
        signal = np.zeros(received_row.shape)
    return signal + mean_term
