"""Reflecting-surface phase configuration.

The aligned design points each surface at its own cluster: element n
of surface m gets

    theta[m, n] = angle(h_ps[m, n, m]) - angle(sum_{k in cluster m} h_dev[m, k, n]),

which makes the own-cluster reflected gains real and non-negative
while leaving every cross-cluster gain zero mean. Averaged over
Rayleigh fading the own-cluster inner product concentrates at
pi * N / (4 * sqrt(|cluster|)).
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet
from .seeding import rng_from_seed
from .sysmodel import cluster_members

ZERO_SUM_TOL = 1e-15

_TWO_PI = 2.0 * np.pi


def configure_aligned(ch: ChannelSet, cluster_of: np.ndarray) -> np.ndarray:
    """Per-element phases aligning each surface with its own cluster.

    Returns an (M, N) array with entries in [0, 2*pi). If the summed
    device channel of an element has magnitude below 1e-15 its angle
    is taken as 0.
    """
    M, N = ch.num_surfaces, ch.num_elements
    members = cluster_members(cluster_of, M)
    theta = np.empty((M, N))
    for m in range(M):
        summed = ch.device_to_ris[m, members[m], :].sum(axis=0)  # (N,)
        sum_angle = np.where(np.abs(summed) < ZERO_SUM_TOL, 0.0, np.angle(summed))
        own = ch.ris_to_ps[m, :, m]
        theta[m] = np.mod(np.angle(own) - sum_angle, _TWO_PI)
    return theta


def baseline_phases(mode: str, num_surfaces: int, num_elements: int, seed: int = 0) -> np.ndarray:
    """Reference phase settings: 'random' uniform on [0, 2*pi), or 'zero'."""
    if mode == "zero":
        return np.zeros((num_surfaces, num_elements))
    if mode == "random":
        rng = rng_from_seed(seed)
        return rng.uniform(0.0, _TWO_PI, size=(num_surfaces, num_elements))
    raise ValueError(f"unknown baseline phase mode {mode!r}")


def corrupt_phases(phases: np.ndarray, bits: int) -> np.ndarray:
    """Quantize phases to a uniform 2**bits grid on [0, 2*pi).

    Each phase snaps to the nearest grid point (wrapping across 2*pi),
    with exact ties resolved toward the lower neighbor, so the
    quantization error never exceeds pi / 2**bits in magnitude.
    """
    if not isinstance(bits, (int, np.integer)) or bits < 1:
        raise ValueError(f"bits must be a positive integer, got {bits!r}")
    levels = 2 ** int(bits)
    step = _TWO_PI / levels
    idx = np.ceil(np.asarray(phases) / step - 0.5)
    return np.mod(idx, levels) * step
