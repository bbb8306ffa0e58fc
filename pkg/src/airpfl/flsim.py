"""Personalized federated training over the analog uplink.

Each cluster trains its own linear model on least-squares tasks. Every
round the devices compute full-batch local gradients, standardize
them, and the PS reconstructs one aggregated gradient per cluster from
the superposed analog uplink before taking a gradient step. Scheme
"ideal" bypasses the channel entirely and serves as the noise-free
reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aircomp import NormalizedGradient, estimate_cluster_gradient, normalize_gradient, uplink
from .channel import all_cascaded_gains, large_scale_coefficients, sample_small_scale
from .control import adaptive_denoisers, unbiased_design
from .powopt import assemble_ratio_problem, solve_projected_ascent
from .ris import baseline_phases, configure_aligned
from .seeding import derive_seed, rng_from_seed
from .sysmodel import Geometry, SystemConfig

SCHEMES = ("ideal", "unbiased", "mmse", "mmse+powopt", "random-phase")

DEFAULT_LEARNING_RATE = 0.05


@dataclass(frozen=True)
class DeviceDataset:
    """Local least-squares task: features (n, D-1) and targets (n,)."""

    features: np.ndarray
    targets: np.ndarray
    owner: int


@dataclass(frozen=True)
class TrainingHistory:
    """Per-round records of one training run."""

    losses: np.ndarray  # (T, M) cluster losses after each round's update
    nmse: np.ndarray    # (T,) per-round gradient estimation NMSE
    scheme: str
    seed: int
    final_weights: np.ndarray  # (M, D)

    def csv_header(self) -> list[str]:
        return ["round", "cluster", "loss", "nmse", "scheme", "seed"]

    def csv_rows(self) -> list[tuple]:
        rows = []
        for t in range(self.losses.shape[0]):
            for m in range(self.losses.shape[1]):
                rows.append(
                    (t, m, float(self.losses[t, m]), float(self.nmse[t]), self.scheme, self.seed)
                )
        return rows


def synth_clustered_tasks(
    cfg: SystemConfig,
    samples_per_device: int,
    label_noise: float,
    task_seed: int,
) -> tuple[list[DeviceDataset], np.ndarray]:
    """Clustered linear-regression tasks sharing a model per cluster.

    Draws one ground-truth weight vector per cluster (i.i.d. standard
    normal in R^D, last coordinate acting as a bias), then gives each
    device standard-normal features and noisy linear labels from its
    cluster's weights. Returns the datasets and the (M, D) truth.
    """
    if samples_per_device < 1:
        raise ValueError("samples_per_device must be >= 1")
    if label_noise < 0:
        raise ValueError("label_noise must be >= 0")
    D = cfg.model_dim
    rng = rng_from_seed(derive_seed(task_seed, "tasks"))
    truth = rng.standard_normal((cfg.num_clusters, D))
    datasets = []
    for k in range(cfg.num_devices):
        m = int(cfg.cluster_of[k])
        x = rng.standard_normal((samples_per_device, D - 1))
        xa = np.concatenate([x, np.ones((samples_per_device, 1))], axis=1)
        y = xa @ truth[m] + label_noise * rng.standard_normal(samples_per_device)
        datasets.append(DeviceDataset(features=x, targets=y, owner=k))
    return datasets, truth


def _augment(features: np.ndarray) -> np.ndarray:
    return np.concatenate([features, np.ones((features.shape[0], 1))], axis=1)


def local_gradient(weights: np.ndarray, ds: DeviceDataset) -> np.ndarray:
    """Full-batch gradient of the device's half mean-squared error."""
    xa = _augment(ds.features)
    residual = xa @ weights - ds.targets
    return xa.T @ residual / ds.targets.shape[0]


def local_loss(weights: np.ndarray, ds: DeviceDataset) -> float:
    xa = _augment(ds.features)
    residual = xa @ weights - ds.targets
    return float(0.5 * np.mean(residual**2))


def cluster_loss(weights: np.ndarray, datasets: list[DeviceDataset], members: np.ndarray) -> float:
    return float(np.mean([local_loss(weights, datasets[k]) for k in members]))


def sgd_step(weights: np.ndarray, grad_estimate: np.ndarray, eta: float) -> np.ndarray:
    return weights - eta * grad_estimate


def run_training(
    cfg: SystemConfig,
    geometry: Geometry,
    datasets: list[DeviceDataset],
    scheme: str,
    rounds: int,
    eta=DEFAULT_LEARNING_RATE,
) -> TrainingHistory:
    """Run one federated training job under the given uplink scheme.

    eta may be a scalar or a length-rounds sequence. All randomness is
    derived from cfg.master_seed and the round counter, and the round
    substreams do not depend on the scheme, so runs with different
    schemes at the same seed see identical channels, noise, and
    baseline phase draws (paired comparisons).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if len(datasets) != cfg.num_devices:
        raise ValueError("one dataset per device is required")
    etas = np.asarray(eta, dtype=float)
    if etas.ndim == 0:
        etas = np.full(rounds, float(etas))
    if etas.shape != (rounds,):
        raise ValueError(f"eta must be scalar or length {rounds}")

    M, K, D, N = cfg.num_clusters, cfg.num_devices, cfg.model_dim, cfg.num_ris_elements
    members = cfg.clusters()
    beta = large_scale_coefficients(geometry, cfg.pathloss_exponent)
    weights = np.zeros((M, D))
    losses = np.empty((rounds, M))
    nmse = np.zeros(rounds)

    for t in range(rounds):
        grads = np.stack(
            [local_gradient(weights[cfg.cluster_of[k]], datasets[k]) for k in range(K)]
        )
        g_true = np.stack([grads[idx].mean(axis=0) for idx in members])

        if scheme == "ideal":
            g_hat = g_true
        else:
            normalized = [normalize_gradient(grads[k]) for k in range(K)]
            g_hat = _estimate_over_channel(
                cfg, beta, members, normalized, scheme, t
            )
            denom = float(np.sum(g_true**2))
            nmse[t] = float(np.sum((g_hat - g_true) ** 2)) / denom if denom > 0 else 0.0

        for m in range(M):
            weights[m] = sgd_step(weights[m], g_hat[m], etas[t])
        if not np.all(np.isfinite(weights)):
            raise RuntimeError(
                f"training diverged at round {t} under scheme {scheme!r} "
                f"(non-finite weights); reduce eta or noise"
            )
        for m in range(M):
            losses[t, m] = cluster_loss(weights[m], datasets, members[m])

    return TrainingHistory(
        losses=losses,
        nmse=nmse,
        scheme=scheme,
        seed=cfg.master_seed,
        final_weights=weights.copy(),
    )


def _estimate_over_channel(cfg, beta, members, normalized, scheme, t):
    """One round of analog aggregation; returns the (M, D) estimates."""
    master = cfg.master_seed
    sigmas = np.array([ng.std for ng in normalized])
    means = np.array([ng.mean for ng in normalized])
    ch = sample_small_scale(cfg, derive_seed(master, "round-channel", t))
    if scheme == "random-phase":
        phases = baseline_phases(
            "random", cfg.num_clusters, cfg.num_ris_elements,
            derive_seed(master, "round-phases", t),
        )
    else:
        phases = configure_aligned(ch, cfg.cluster_of)

    # Clusters whose devices all report zero std carry no analog
    # signal this round; their estimate is the exact mean term. The
    # statistical design is computed on sanitized stds and then
    # overridden for those clusters.
    dead = np.array([bool(np.all(sigmas[idx] == 0.0)) for idx in members])
    sanitized = sigmas.copy()
    for m in np.flatnonzero(dead):
        sanitized[members[m]] = 1.0
    base = unbiased_design(
        beta, sanitized, cfg.max_power, cfg.model_dim, cfg.num_ris_elements, cfg.cluster_of
    )
    powers, denoisers = base.powers.copy(), base.denoisers.copy()

    if scheme in ("mmse", "mmse+powopt", "random-phase"):
        gains = all_cascaded_gains(ch, beta, phases)
        if scheme == "mmse+powopt":
            prob = assemble_ratio_problem(
                gains, sigmas, cfg.noise_var, cfg.cluster_of, cfg.max_power
            )
            sol = solve_projected_ascent(prob, seed=derive_seed(master, "round-powopt", t))
            powers = sol.q**2
        denoisers = adaptive_denoisers(
            powers, gains, sigmas, cfg.noise_var, cfg.cluster_of, base.denoisers
        )

    for m in np.flatnonzero(dead):
        denoisers[m] = np.inf
        powers[members[m]] = 0.0

    received = uplink(
        ch, beta, phases, powers, normalized, cfg.noise_var,
        derive_seed(master, "round-noise", t),
    )
    return np.stack(
        [
            estimate_cluster_gradient(
                received[m], denoisers[m], means[members[m]], members[m].size
            )
            for m in range(cfg.num_clusters)
        ]
    )
