"""Fading channels for the surface-assisted uplink.

Direct device-to-PS paths are assumed blocked, so every uplink symbol
travels device -> surface -> PS. Small-scale fading is Rayleigh: each
entry is circularly symmetric complex Gaussian with unit variance
(real and imaginary parts each N(0, 1/2)), redrawn independently every
communication round (block fading). Large-scale attenuation is a pure
distance power law applied to the cascaded path amplitude,

    beta[i, k] = (d_ki * d_i)^(-alpha/2),

with d_ki the device-k-to-surface-i distance (clamped below at 1 m)
and d_i the surface-i-to-PS distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import rng_from_seed
from .sysmodel import Geometry, SystemConfig

MIN_DEVICE_RIS_DISTANCE = 1.0


@dataclass(frozen=True)
class ChannelSet:
    """One block-fading realization of every uplink path.

    ris_to_ps[i, n, m] is element n of the channel from surface i to
    PS antenna m. device_to_ris[i, k, n] is element n of the channel
    from device k to surface i.
    """

    ris_to_ps: np.ndarray      # (M, N, M) complex
    device_to_ris: np.ndarray  # (M, K, N) complex

    @property
    def num_surfaces(self) -> int:
        return self.ris_to_ps.shape[0]

    @property
    def num_elements(self) -> int:
        return self.ris_to_ps.shape[1]

    @property
    def num_devices(self) -> int:
        return self.device_to_ris.shape[1]


def large_scale_coefficients(geom: Geometry, pathloss_exponent: float) -> np.ndarray:
    """Cascaded amplitude attenuation beta, shape (M, K).

    Covers every (surface, device) pair, not only a device's own
    cluster, because a device near a foreign surface also reflects
    off it.
    """
    diff = geom.device_positions[None, :, :] - geom.ris_positions[:, None, :]
    d_dev = np.linalg.norm(diff, axis=2)
    d_dev = np.maximum(d_dev, MIN_DEVICE_RIS_DISTANCE)
    d_ps = np.linalg.norm(geom.ris_positions - geom.ps_position[None, :], axis=1)
    beta = (d_dev * d_ps[:, None]) ** (-pathloss_exponent / 2.0)
    if not np.all(np.isfinite(beta)):
        raise ValueError("non-finite large-scale coefficient; check geometry")
    return beta


def sample_small_scale(cfg: SystemConfig, round_seed: int) -> ChannelSet:
    """Draw one block-fading realization, deterministic in round_seed.

    Draw order is fixed: surface-to-PS first, then device-to-surface.
    """
    M, K, N = cfg.num_clusters, cfg.num_devices, cfg.num_ris_elements
    rng = rng_from_seed(round_seed)
    ris_to_ps = _cn01(rng, (M, N, M))
    device_to_ris = _cn01(rng, (M, K, N))
    return ChannelSet(ris_to_ps=ris_to_ps, device_to_ris=device_to_ris)


def _cn01(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def cascaded_gain(
    ch: ChannelSet, beta: np.ndarray, phases: np.ndarray, m: int, k: int
) -> float:
    """Real part of the cascaded device-k-to-antenna-m gain.

    Sums over every surface i the attenuated reflected path
    beta[i, k] * Re{ h_ps[i, :, m]^H diag(e^{j phases[i]}) h_dev[i, k] }.
    """
    M = ch.num_surfaces
    if not (0 <= m < M):
        raise ValueError(f"antenna index {m} out of range")
    if not (0 <= k < ch.num_devices):
        raise ValueError(f"device index {k} out of range")
    total = 0.0
    for i in range(M):
        reflected = np.exp(1j * phases[i]) * ch.device_to_ris[i, k]
        total += beta[i, k] * float(np.real(np.vdot(ch.ris_to_ps[i, :, m], reflected)))
    return total


def all_cascaded_gains(
    ch: ChannelSet, beta: np.ndarray, phases: np.ndarray
) -> np.ndarray:
    """Matrix of cascaded real gains for every (antenna m, device k).

    Vectorized equivalent of calling cascaded_gain over the full grid.
    """
    phase = np.exp(1j * phases)  # (M, N)
    # inner[i, m, k] = h_ps[i,:,m]^H diag(phase[i]) h_dev[i,k]
    inner = np.einsum(
        "inm,in,ikn->imk", np.conj(ch.ris_to_ps), phase, ch.device_to_ris, optimize=True
    )
    return np.einsum("ik,imk->mk", beta, np.real(inner), optimize=True)
