"""Experiment drivers: estimation-error sweeps and alignment checks.

The sweep measures gradient-estimation NMSE on synthetic standardized
gradients across surface sizes, power budgets, and schemes. The
alignment check verifies the statistical interference elimination of
the aligned phase design pairwise: own-cluster effective gains must
match their closed-form mean and cross-cluster gains must average to
zero within Monte Carlo error.

Both drivers vectorize across trials in fixed-size chunks, so a run is
a pure function of (config, arguments, seed).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .channel import large_scale_coefficients
from .ris import corrupt_phases
from .seeding import derive_seed, rng_from_seed
from .sysmodel import Geometry, SystemConfig, make_config, place_geometry

CHUNK = 100

SWEEP_SCHEMES = ("unbiased", "mmse", "unbiased-1bit", "mmse-1bit", "random-phase")

DESK_N_VALUES = (16, 32, 64, 128, 256)
DESK_P_VALUES = (0.1, 10.0)
DESK_TRIALS = 500


def desk_scale_config(master_seed: int = 7) -> SystemConfig:
    """Default 20-device, 4-cluster deployment used by the demos."""
    K, M = 20, 4
    return make_config(
        num_devices=K,
        num_clusters=M,
        num_ris_elements=64,
        model_dim=64,
        cluster_of=np.repeat(np.arange(M), K // M),
        max_power=1.0,
        noise_var=1e-10,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# batched channel machinery (trial axis first)
# ---------------------------------------------------------------------------

def _sample_batch(rng, trials, M, K, N):
    hp = rng.standard_normal((trials, M, N, M)) + 1j * rng.standard_normal((trials, M, N, M))
    hd = rng.standard_normal((trials, M, K, N)) + 1j * rng.standard_normal((trials, M, K, N))
    return hp / np.sqrt(2.0), hd / np.sqrt(2.0)


def _aligned_phases_batch(hp, hd, members):
    """Aligned phases per trial, shape (T, M, N)."""
    T, M, N, _ = hp.shape
    theta = np.empty((T, M, N))
    for m, idx in enumerate(members):
        summed = hd[:, m, idx, :].sum(axis=1)  # (T, N)
        ang = np.where(np.abs(summed) < 1e-15, 0.0, np.angle(summed))
        theta[:, m, :] = np.mod(np.angle(hp[:, m, :, m]) - ang, 2.0 * np.pi)
    return theta


def _gains_batch(hp, hd, theta, beta):
    """Real cascaded gains per trial, shape (T, M, K)."""
    phase = np.exp(1j * theta)
    inner = np.einsum("tinm,tin,tikn->timk", np.conj(hp), phase, hd, optimize=True)
    return np.einsum("ik,timk->tmk", beta, np.real(inner), optimize=True)


def _components_batch(hp, hd, theta, beta):
    """Per-surface gain components, shape (T, M_surface, M_antenna, K)."""
    phase = np.exp(1j * theta)
    inner = np.einsum("tinm,tin,tikn->timk", np.conj(hp), phase, hd, optimize=True)
    return beta[None, :, None, :] * np.real(inner)


def _unbiased_batch(beta, sigmas, max_power, model_dim, num_elements, members):
    """Vectorized statistical design; sigmas has shape (T, K)."""
    T, K = sigmas.shape
    M = beta.shape[0]
    powers = np.zeros((T, K))
    lam = np.empty((T, M))
    root_d = np.sqrt(model_dim)
    for m, idx in enumerate(members):
        ratio = np.sqrt(max_power[idx])[None, :] * beta[m, idx][None, :] / (sigmas[:, idx] * root_d)
        zeta = ratio.min(axis=1)  # (T,)
        p = (sigmas[:, idx] / beta[m, idx][None, :]) ** 2 * zeta[:, None] ** 2
        powers[:, idx] = np.minimum(p, max_power[idx][None, :])
        lam[:, m] = np.pi * num_elements * np.sqrt(idx.size) * zeta / 4.0
    return powers, lam


def _adaptive_lambda_batch(powers, gains, sigmas, noise_var, members, fallback):
    """Vectorized adaptive denoisers with the same degraded modes as
    control.adaptive_denoisers: fallback on underflow, +inf when the
    minimizer is non-positive."""
    T, M, _ = gains.shape
    num = np.einsum("tk,tmk->tm", powers * sigmas**2, gains**2, optimize=True) + noise_var / 2.0
    lam = np.empty((T, M))
    for m, idx in enumerate(members):
        den = np.einsum(
            "tk,tk->t", np.sqrt(powers[:, idx]) * sigmas[:, idx] ** 3, gains[:, m, idx]
        )
        size = idx.size
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = size * num[:, m] / den
        lam_m = np.where(np.abs(den) < 1e-15, fallback[:, m], raw)
        lam_m = np.where(lam_m > 0, lam_m, np.inf)
        lam[:, m] = lam_m
    return lam


# ---------------------------------------------------------------------------
# NMSE sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    num_elements: int
    p_max: float
    scheme: str
    trials: int
    nmse_mean: float
    nmse_stderr: float


@dataclass(frozen=True)
class SweepResult:
    cells: list[SweepCell]
    seed: int
    config_digest: str

    def csv_header(self) -> list[str]:
        return ["N", "P_max", "scheme", "trials", "nmse_mean", "nmse_stderr", "seed"]

    def csv_rows(self) -> list[tuple]:
        return [
            (c.num_elements, c.p_max, c.scheme, c.trials, c.nmse_mean, c.nmse_stderr, self.seed)
            for c in self.cells
        ]

    def cell(self, num_elements: int, p_max: float, scheme: str) -> SweepCell:
        for c in self.cells:
            if c.num_elements == num_elements and c.p_max == p_max and c.scheme == scheme:
                return c
        raise KeyError((num_elements, p_max, scheme))


def _parse_scheme(name: str):
    """Split a sweep scheme label into (design, phase kind, quant bits)."""
    base, bits = name, None
    if name.endswith("bit"):
        stem, _, suffix = name.rpartition("-")
        if stem and suffix[:-3].isdigit():
            base, bits = stem, int(suffix[:-3])
    if base == "ideal":
        return "ideal", "none", None
    if base == "random-phase":
        return "unbiased+adaptive", "random", bits
    if base == "unbiased":
        return "unbiased", "aligned", bits
    if base == "mmse":
        return "unbiased+adaptive", "aligned", bits
    if base == "mmse+powopt":
        return "powopt+adaptive", "aligned", bits
    raise ValueError(f"unknown sweep scheme {name!r}")


def nmse_sweep(
    cfg: SystemConfig,
    schemes: list[str],
    n_values: list[int],
    p_values: list[float],
    trials: int,
    seed: int,
) -> SweepResult:
    """Monte Carlo NMSE of the cluster gradient estimates.

    For every (N, P, scheme) cell, runs `trials` independent rounds
    with fresh channels, fresh synthetic gradients (i.i.d. standard
    normal entries per device, standardized exactly before
    transmission), and fresh noise; reports mean NMSE and its standard
    error. Channel, gradient, and noise draws are shared across
    schemes within a cell so scheme comparisons are paired.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error")
    for s in schemes:
        _parse_scheme(s)
    geometry = place_geometry(cfg, seed)
    beta_full = large_scale_coefficients(geometry, cfg.pathloss_exponent)
    members = cfg.clusters()
    cells = []
    for n in n_values:
        for p_max in p_values:
            stats = _sweep_cell(cfg, beta_full, members, int(n), float(p_max), schemes, trials, seed)
            for s in schemes:
                mean, stderr = stats[s]
                cells.append(
                    SweepCell(
                        num_elements=int(n),
                        p_max=float(p_max),
                        scheme=s,
                        trials=trials,
                        nmse_mean=mean,
                        nmse_stderr=stderr,
                    )
                )
    digest = hashlib.sha256(cfg.to_json().encode()).hexdigest()[:12]
    return SweepResult(cells=cells, seed=seed, config_digest=digest)


def _sweep_cell(cfg, beta, members, n, p_max, schemes, trials, seed):
    M, K, D = cfg.num_clusters, cfg.num_devices, cfg.model_dim
    power = np.full(K, p_max)
    sums = {s: 0.0 for s in schemes}
    sqsums = {s: 0.0 for s in schemes}
    for start in range(0, trials, CHUNK):
        tc = min(CHUNK, trials - start)
        rng = rng_from_seed(derive_seed(seed, "sweep-cell", n, repr(p_max), start))
        hp, hd = _sample_batch(rng, tc, M, K, n)
        raw = rng.standard_normal((tc, K, D))
        noise_re = rng.standard_normal((tc, M, D)) * np.sqrt(cfg.noise_var / 2.0)
        theta_rand = rng.uniform(0.0, 2.0 * np.pi, size=(tc, M, n))

        mean_u = raw.mean(axis=2)
        std = raw.std(axis=2)
        gbar = (raw - mean_u[:, :, None]) / std[:, :, None]
        g_true = np.stack([raw[:, idx, :].mean(axis=1) for idx in members], axis=1)
        denom = np.sum(g_true**2, axis=(1, 2))
        mean_term = np.stack([mean_u[:, idx].mean(axis=1) for idx in members], axis=1)

        theta_aligned = _aligned_phases_batch(hp, hd, members)
        gains_cache: dict = {}

        def gains_for(phase_kind, bits):
            key = (phase_kind, bits)
            if key not in gains_cache:
                if phase_kind == "aligned":
                    theta = theta_aligned
                elif phase_kind == "random":
                    theta = theta_rand
                else:
                    raise ValueError(phase_kind)
                if bits is not None:
                    theta = corrupt_phases(theta, bits)
                gains_cache[key] = _gains_batch(hp, hd, theta, beta)
            return gains_cache[key]

        base_p, base_lam = _unbiased_batch(beta, std, power, D, n, members)

        for s in schemes:
            design, phase_kind, bits = _parse_scheme(s)
            if design == "ideal":
                continue  # NMSE identically zero
            gains = gains_for(phase_kind, bits)
            if design == "unbiased":
                p_t, lam_t = base_p, base_lam
            elif design == "unbiased+adaptive":
                p_t = base_p
                lam_t = _adaptive_lambda_batch(p_t, gains, std, cfg.noise_var, members, base_lam)
            else:  # powopt+adaptive
                p_t = _powopt_batch(gains, std, cfg.noise_var, cfg.cluster_of, power, seed, n, start)
                lam_t = _adaptive_lambda_batch(p_t, gains, std, cfg.noise_var, members, base_lam)
            w = np.sqrt(p_t)[:, None, :] * gains / lam_t[:, :, None]
            g_hat = (
                np.einsum("tmk,tkd->tmd", w, gbar, optimize=True)
                + noise_re / lam_t[:, :, None]
                + mean_term[:, :, None]
            )
            err = np.sum((g_hat - g_true) ** 2, axis=(1, 2)) / denom
            sums[s] += float(err.sum())
            sqsums[s] += float((err**2).sum())

    out = {}
    for s in schemes:
        if _parse_scheme(s)[0] == "ideal":
            out[s] = (0.0, 0.0)
            continue
        mean = sums[s] / trials
        var = max(sqsums[s] / trials - mean**2, 0.0) * trials / (trials - 1)
        out[s] = (mean, float(np.sqrt(var / trials)))
    return out


def _powopt_batch(gains, sigmas, noise_var, cluster_of, max_power, seed, n, start):
    from .powopt import assemble_ratio_problem, solve_projected_ascent

    T = gains.shape[0]
    p = np.empty((T, gains.shape[2]))
    for t in range(T):
        prob = assemble_ratio_problem(gains[t], sigmas[t], noise_var, cluster_of, max_power)
        sol = solve_projected_ascent(
            prob, seed=derive_seed(seed, "sweep-powopt", n, start + t)
        )
        p[t] = sol.q**2
    return p


# ---------------------------------------------------------------------------
# interference-elimination verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EliminationRow:
    antenna: int
    device: int
    same_cluster: bool
    mean: float
    stderr: float
    target: float
    passed: bool


@dataclass(frozen=True)
class CorrectionCheck:
    """Zero-mean check of one foreign-surface component of an own-cluster gain."""

    antenna: int
    device: int
    surface: int
    mean: float
    stderr: float
    passed: bool


@dataclass(frozen=True)
class EliminationReport:
    rows: list[EliminationRow]
    corrections: list[CorrectionCheck]
    trials: int
    num_elements: int
    pairs_pass: bool
    corrections_pass: bool
    all_pass: bool

    def csv_header(self) -> list[str]:
        return ["m", "k", "same_cluster", "mean", "stderr", "target", "pass"]

    def csv_rows(self) -> list[tuple]:
        return [
            (r.antenna, r.device, r.same_cluster, r.mean, r.stderr, r.target, r.passed)
            for r in self.rows
        ]


def verify_elimination(
    cfg: SystemConfig, trials: int, seed: int, phases: str = "aligned"
) -> EliminationReport:
    """Check statistical interference elimination pair by pair.

    Samples `trials` fading realizations under the aligned phase
    design with unit powers and unit denoisers, then tests each
    (antenna m, device k) effective-gain mean: own-cluster pairs
    against beta[m, k] * pi * N / (4 * sqrt(|cluster|)), cross-cluster
    pairs against zero, both at three standard errors. Foreign-surface
    components of own-cluster gains are checked against zero as well.

    With phases="random" the run becomes a negative control: uniform
    random phases destroy the alignment, so every pair (own-cluster
    included) is tested against a zero mean.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if phases not in ("aligned", "random"):
        raise ValueError("phases must be 'aligned' or 'random'")
    M, K, N = cfg.num_clusters, cfg.num_devices, cfg.num_ris_elements
    geometry = place_geometry(cfg, seed)
    beta = large_scale_coefficients(geometry, cfg.pathloss_exponent)
    members = cfg.clusters()
    sizes = np.array([idx.size for idx in members])

    s1 = np.zeros((M, K))
    s2 = np.zeros((M, K))
    c1 = np.zeros((M, M, K))
    c2 = np.zeros((M, M, K))
    for start in range(0, trials, CHUNK):
        tc = min(CHUNK, trials - start)
        rng = rng_from_seed(derive_seed(seed, "elimination", start))
        hp, hd = _sample_batch(rng, tc, M, K, N)
        if phases == "random":
            theta = rng.uniform(0.0, 2.0 * np.pi, size=(tc, M, N))
        else:
            theta = _aligned_phases_batch(hp, hd, members)
        comp = _components_batch(hp, hd, theta, beta)  # (tc, M_surface, M_antenna, K)
        full = comp.sum(axis=1)  # (tc, M, K)
        s1 += full.sum(axis=0)
        s2 += (full**2).sum(axis=0)
        c1 += comp.sum(axis=0).transpose(1, 0, 2)  # (antenna, surface, device)
        c2 += (comp**2).sum(axis=0).transpose(1, 0, 2)

    def stats(total, total_sq):
        mean = total / trials
        var = np.maximum(total_sq / trials - mean**2, 0.0) * trials / (trials - 1)
        return mean, np.sqrt(var / trials)

    mean, stderr = stats(s1, s2)
    cmean, cstderr = stats(c1, c2)

    rows = []
    corrections = []
    for m in range(M):
        for k in range(K):
            own = int(cfg.cluster_of[k]) == m
            aligned_own = own and phases == "aligned"
            target = (
                beta[m, k] * np.pi * N / (4.0 * np.sqrt(sizes[m]))
                if aligned_own
                else 0.0
            )
            passed = bool(abs(mean[m, k] - target) <= 3.0 * stderr[m, k])
            rows.append(
                EliminationRow(
                    antenna=m,
                    device=k,
                    same_cluster=own,
                    mean=float(mean[m, k]),
                    stderr=float(stderr[m, k]),
                    target=float(target),
                    passed=passed,
                )
            )
            if own:
                for i in range(M):
                    if i == m:
                        continue
                    ok = bool(abs(cmean[m, i, k]) <= 3.0 * cstderr[m, i, k])
                    corrections.append(
                        CorrectionCheck(
                            antenna=m,
                            device=k,
                            surface=i,
                            mean=float(cmean[m, i, k]),
                            stderr=float(cstderr[m, i, k]),
                            passed=ok,
                        )
                    )
    pairs_pass = all(r.passed for r in rows)
    corrections_pass = all(c.passed for c in corrections)
    return EliminationReport(
        rows=rows,
        corrections=corrections,
        trials=trials,
        num_elements=N,
        pairs_pass=pairs_pass,
        corrections_pass=corrections_pass,
        all_pass=pairs_pass and corrections_pass,
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def export_csv(result, path: str) -> None:
    """Write any result exposing csv_header()/csv_rows() to a CSV file.

    Floats are written with 17 significant digits so a round trip
    through the file reproduces them exactly. An empty result produces
    a header-only file.
    """
    header = result.csv_header()
    rows = result.csv_rows()
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_format_value(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
