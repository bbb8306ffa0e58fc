"""System configuration and network geometry.

A deployment has one parameter server (PS) with one antenna per device
cluster, one reflecting surface per cluster, and K single-antenna
devices partitioned into M clusters. The PS sits at the origin,
surface m sits on a circle of radius ``ps_ris_distance`` at bearing
2*pi*(m+1)/M, and the devices of cluster m are drawn uniformly by area
from a disk of radius ``device_disk_radius`` centered on surface m.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .seeding import derive_seed, rng_from_seed


class ConfigError(ValueError):
    """Raised when a system configuration violates an invariant."""


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Static description of one simulated deployment.

    cluster_of maps each device index to its cluster (0-based), and
    max_power holds the per-device transmit power budget in watts.
    """

    num_devices: int
    num_clusters: int
    num_ris_elements: int
    model_dim: int
    cluster_of: np.ndarray
    max_power: np.ndarray
    noise_var: float
    pathloss_exponent: float
    ps_ris_distance: float
    device_disk_radius: float
    master_seed: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, SystemConfig):
            return NotImplemented
        for field in dataclasses.fields(self):
            a = getattr(self, field.name)
            b = getattr(other, field.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    def clusters(self) -> list[np.ndarray]:
        """Device indices per cluster, ascending within each cluster."""
        return cluster_members(self.cluster_of, self.num_clusters)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_json(self) -> str:
        doc = {
            "num_devices": self.num_devices,
            "num_clusters": self.num_clusters,
            "num_ris_elements": self.num_ris_elements,
            "model_dim": self.model_dim,
            "cluster_of": [int(m) for m in self.cluster_of],
            "max_power": [float(p) for p in self.max_power],
            "noise_var": self.noise_var,
            "pathloss_exponent": self.pathloss_exponent,
            "ps_ris_distance": self.ps_ris_distance,
            "device_disk_radius": self.device_disk_radius,
            "master_seed": self.master_seed,
        }
        return json.dumps(doc, indent=2)


def cluster_members(cluster_of: np.ndarray, num_clusters: int) -> list[np.ndarray]:
    cluster_of = np.asarray(cluster_of, dtype=int)
    return [np.flatnonzero(cluster_of == m) for m in range(num_clusters)]


def make_config(
    num_devices: int,
    num_clusters: int,
    num_ris_elements: int,
    model_dim: int,
    cluster_of,
    max_power,
    noise_var: float,
    pathloss_exponent: float = 2.2,
    ps_ris_distance: float = 200.0,
    device_disk_radius: float = 300.0,
    master_seed: int = 0,
) -> SystemConfig:
    """Build and validate a SystemConfig; scalar max_power broadcasts."""
    cluster_of = np.asarray(cluster_of, dtype=int).copy()
    power = np.asarray(max_power, dtype=float)
    if power.ndim == 0:
        power = np.full(int(num_devices), float(power))
    cfg = SystemConfig(
        num_devices=int(num_devices),
        num_clusters=int(num_clusters),
        num_ris_elements=int(num_ris_elements),
        model_dim=int(model_dim),
        cluster_of=cluster_of,
        max_power=power.copy(),
        noise_var=float(noise_var),
        pathloss_exponent=float(pathloss_exponent),
        ps_ris_distance=float(ps_ris_distance),
        device_disk_radius=float(device_disk_radius),
        master_seed=int(master_seed),
    )
    return validate_config(cfg)


def config_from_json(text: str) -> SystemConfig:
    doc = json.loads(text)
    required = [
        "num_devices",
        "num_clusters",
        "num_ris_elements",
        "model_dim",
        "cluster_of",
        "max_power",
        "noise_var",
    ]
    missing = [name for name in required if name not in doc]
    if missing:
        raise ConfigError(f"config missing fields: {', '.join(missing)}")
    return make_config(
        num_devices=doc["num_devices"],
        num_clusters=doc["num_clusters"],
        num_ris_elements=doc["num_ris_elements"],
        model_dim=doc["model_dim"],
        cluster_of=doc["cluster_of"],
        max_power=doc["max_power"],
        noise_var=doc["noise_var"],
        pathloss_exponent=doc.get("pathloss_exponent", 2.2),
        ps_ris_distance=doc.get("ps_ris_distance", 200.0),
        device_disk_radius=doc.get("device_disk_radius", 300.0),
        master_seed=doc.get("master_seed", 0),
    )


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Check every structural invariant; report the first violation."""
    for name in ("num_devices", "num_clusters", "num_ris_elements", "model_dim"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, np.integer)) or value < 1:
            raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    K, M = cfg.num_devices, cfg.num_clusters
    if cfg.cluster_of.shape != (K,):
        raise ConfigError(
            f"cluster_of must have one entry per device ({K}), got shape {cfg.cluster_of.shape}"
        )
    if cfg.cluster_of.min(initial=0) < 0 or cfg.cluster_of.max(initial=0) >= M:
        raise ConfigError("cluster_of entries must lie in [0, num_clusters)")
    sizes = np.bincount(cfg.cluster_of, minlength=M)
    if (sizes == 0).any():
        empty = int(np.flatnonzero(sizes == 0)[0])
        raise ConfigError(f"empty cluster: cluster {empty} has no devices (cluster_of)")
    if not M < K:
        raise ConfigError(f"num_clusters must be < num_devices (M={M}, K={K})")
    if cfg.max_power.shape != (K,):
        raise ConfigError(f"max_power must have shape ({K},), got {cfg.max_power.shape}")
    if not np.all(np.isfinite(cfg.max_power)) or (cfg.max_power <= 0).any():
        raise ConfigError("max_power entries must be positive and finite")
    if not np.isfinite(cfg.noise_var) or cfg.noise_var < 0:
        raise ConfigError(f"noise_var must be >= 0, got {cfg.noise_var!r}")
    if not np.isfinite(cfg.pathloss_exponent) or cfg.pathloss_exponent <= 0:
        raise ConfigError(f"pathloss_exponent must be > 0, got {cfg.pathloss_exponent!r}")
    if not np.isfinite(cfg.ps_ris_distance) or cfg.ps_ris_distance <= 0:
        raise ConfigError(f"ps_ris_distance must be > 0, got {cfg.ps_ris_distance!r}")
    if not np.isfinite(cfg.device_disk_radius) or cfg.device_disk_radius <= 0:
        raise ConfigError(f"device_disk_radius must be > 0, got {cfg.device_disk_radius!r}")
    if not (0 <= cfg.master_seed < 2**64):
        raise ConfigError("master_seed must fit in an unsigned 64-bit integer")
    return cfg


@dataclass(frozen=True)
class Geometry:
    """Planar positions of the PS, the surfaces, and the devices."""

    ps_position: np.ndarray       # (2,)
    ris_positions: np.ndarray     # (M, 2)
    device_positions: np.ndarray  # (K, 2)


def place_geometry(cfg: SystemConfig, seed: int) -> Geometry:
    """Sample a deployment layout, deterministic in (cfg, seed).

    Surface m goes to bearing 2*pi*(m+1)/M on the PS-centered circle.
    Device k is drawn uniformly by area from the disk around its own
    cluster's surface (radius r = R*sqrt(u) with u uniform).
    """
    M, K, R = cfg.num_clusters, cfg.num_devices, cfg.device_disk_radius
    angles = 2.0 * np.pi * (np.arange(M) + 1) / M
    ris = cfg.ps_ris_distance * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    rng = rng_from_seed(derive_seed(seed, "geometry"))
    u = rng.random(K)
    v = rng.random(K)
    r = R * np.sqrt(u)
    phi = 2.0 * np.pi * v
    offsets = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    devices = ris[cfg.cluster_of] + offsets
    return Geometry(
        ps_position=np.zeros(2),
        ris_positions=ris,
        device_positions=devices,
    )
