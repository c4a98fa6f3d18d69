"""Configuration-driven experiment campaigns with reproducible CSV outputs.

A campaign sweeps a parameter grid (pair count, attack intensity, SNR,
distance range), runs seeded Monte Carlo realizations at every grid point,
and emits flat CSV tables plus a JSON manifest whose (config, seed) pair
regenerates every output byte.

Two studies are provided: :func:`run_qoc_sweep` measures weighted-sum-rate
degradation per attack (evasion semantics: the controller reruns on the
perturbed tensor, and the resulting precoders are scored both on the true
channels and on the perturbed ones), and :func:`run_eigen_study` pools
channel eigenvalues per condition, ranks the distribution zoo, and runs
detection against the clean baseline.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .attack import AttackConfig, apply_attack
from .control import ControllerSpec, controller_precoders
from .netmodel import (ConfigError, SimConfig, build_graph, qoc,
                       sample_channels, sample_topology)
from .statfit import best_fit, detect, pool_eigenvalues

__all__ = ["Campaign", "sweep_points", "run_qoc_sweep", "run_eigen_study"]

_CAMPAIGN_FIELDS = ("sim", "controller", "attacks", "sweep", "n_realizations",
                    "outputs", "eigen_sample_sizes", "svd_mode", "drift_threshold")

_SWEEP_AXES = ("n_pairs", "l", "l_c", "l_p", "snr_db", "d_range")


@dataclass
class Campaign:
    """One experiment description: base scenario, controller, attack list and
    the parameter grid to sweep."""

    sim: SimConfig
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    attacks: list = field(default_factory=list)
    sweep: dict = field(default_factory=dict)
    n_realizations: int = 25
    outputs: str = "out"
    eigen_sample_sizes: list = field(default_factory=list)
    svd_mode: str = "unfold"
    drift_threshold: float = 0.25

    def __post_init__(self) -> None:
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.svd_mode not in ("unfold", "slice0"):
            raise ConfigError("svd_mode must be 'unfold' or 'slice0'")
        if not self.drift_threshold > 0:
            raise ConfigError("drift_threshold must be > 0")
        for axis, values in self.sweep.items():
            if axis not in _SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {axis!r}; "
                                  f"expected one of {_SWEEP_AXES}")
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ConfigError(f"sweep axis {axis!r} needs a nonempty list")
        for n in self.eigen_sample_sizes:
            if int(n) != n or n < 5:
                raise ConfigError("eigen_sample_sizes entries must be integers >= 5")

    @classmethod
    def from_dict(cls, data: dict) -> "Campaign":
        if not isinstance(data, dict):
            raise ConfigError("campaign config must be a JSON object")
        unknown = set(data) - set(_CAMPAIGN_FIELDS)
        if unknown:
            raise ConfigError(f"unknown campaign config keys: {sorted(unknown)}")
        if "sim" not in data:
            raise ConfigError("campaign config requires 'sim'")
        kwargs = dict(data)
        kwargs["sim"] = SimConfig.from_dict(data["sim"])
        if "controller" in data:
            kwargs["controller"] = ControllerSpec.from_dict(data["controller"])
        if "attacks" in data:
            kwargs["attacks"] = [AttackConfig.from_dict(a) for a in data["attacks"]]
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json_file(cls, path) -> "Campaign":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read campaign config: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "sim": self.sim.to_dict(),
            "controller": self.controller.to_dict(),
            "attacks": [a.to_dict() for a in self.attacks],
            "sweep": self.sweep,
            "n_realizations": self.n_realizations,
            "outputs": self.outputs,
            "eigen_sample_sizes": list(self.eigen_sample_sizes),
            "svd_mode": self.svd_mode,
            "drift_threshold": self.drift_threshold,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def sweep_points(campaign: Campaign) -> list:
    """Cartesian grid of the sweep axes (one empty point when no sweep)."""
    axes = sorted(campaign.sweep)
    if not axes:
        return [{}]
    combos = itertools.product(*(campaign.sweep[a] for a in axes))
    return [dict(zip(axes, combo)) for combo in combos]


def _sim_at_point(sim: SimConfig, point: dict) -> SimConfig:
    changes = {}
    if "n_pairs" in point and point["n_pairs"] != sim.n_pairs:
        changes["n_pairs"] = int(point["n_pairs"])
        # per-pair vectors sized for the base N cannot carry over
        changes["weights"] = None
        changes["noise_power"] = None
    if "snr_db" in point:
        changes["snr_db"] = float(point["snr_db"])
    if "d_range" in point:
        d_min, d_max = point["d_range"]
        changes["d_min_m"] = float(d_min)
        changes["d_max_m"] = float(d_max)
    return replace(sim, **changes) if changes else sim


def _attacks_at_point(attacks: list, point: dict) -> list:
    out = []
    for atk in attacks:
        changes = {}
        if "l" in point:
            changes["l_c"] = float(point["l"])
            changes["l_p"] = float(point["l"])
        if "l_c" in point:
            changes["l_c"] = float(point["l_c"])
        if "l_p" in point:
            changes["l_p"] = float(point["l_p"])
        out.append(replace(atk, **changes) if changes else atk)
    return out


def attack_label(cfg: AttackConfig) -> str:
    if cfg.kind in ("BcVertex", "BcEdge", "UpperBoundBc"):
        return f"{cfg.kind}_lc{cfg.l_c:g}"
    if cfg.kind in ("BpVertex", "BpEdge", "UniformBp"):
        return f"{cfg.kind}_lp{cfg.l_p:g}"
    return cfg.kind


def _point_label(point: dict) -> str:
    if not point:
        return "base"
    return ",".join(f"{k}={point[k]}" for k in sorted(point))


def _point_columns(point: dict) -> dict:
    cols = {}
    for key, value in sorted(point.items()):
        if key == "d_range":
            cols["d_min_m"], cols["d_max_m"] = value
        else:
            cols[key] = value
    return cols


def _realization_network(sim: SimConfig, point_idx: int, r_idx: int):
    rng = np.random.default_rng([sim.seed, point_idx, r_idx, 0])
    topo = sample_topology(sim, rng)
    h = sample_channels(topo, sim, rng)
    g = build_graph(h, topo, sim)
    return topo, h, g


def _attack_rng(sim: SimConfig, atk: AttackConfig, point_idx: int,
                r_idx: int, a_idx: int) -> np.random.Generator:
    return np.random.default_rng([sim.seed, atk.seed, point_idx, r_idx, a_idx + 1])


def _qoc_realization(sim, controller, attacks, point_idx, r_idx):
    topo, h, g = _realization_network(sim, point_idx, r_idx)
    noise = g.noise_power.copy()
    q_clean = controller_precoders(g, controller, sim.p_max)
    clean = qoc(g, q_clean)
    per_attack = []
    for a_idx, atk in enumerate(attacks):
        h_hat, _ = apply_attack(h, atk, _attack_rng(sim, atk, point_idx, r_idx, a_idx))
        # evasion: same controller, same noise floor; only the tensor differs
        g_hat = build_graph(h_hat, topo, sim, noise=noise)
        q_hat = controller_precoders(g_hat, controller, sim.p_max)
        per_attack.append((qoc(g, q_hat), qoc(g_hat, q_hat)))
    return clean, per_attack


def _parallel_map(fn, indices, threads: int):
    if threads <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def run_qoc_sweep(campaign: Campaign, out_dir=None, threads: int = 1) -> list:
    """QoC degradation table: one row per (sweep point, attack).

    ``ratio_true_channel`` scores the perturbed-input precoders on the true
    channels; ``ratio_reported`` scores them on the tensor the controller was
    shown.  An empty attack list yields one ``none`` row per point with unit
    ratios.
    """
    rows = []
    for point_idx, point in enumerate(sweep_points(campaign)):
        label = _point_label(point)
        try:
            sim = _sim_at_point(campaign.sim, point)
            attacks = _attacks_at_point(campaign.attacks, point)
            reals = _parallel_map(
                lambda r: _qoc_realization(sim, campaign.controller, attacks,
                                           point_idx, r),
                range(campaign.n_realizations), threads)
        except Exception as exc:
            raise RuntimeError(f"sweep point [{label}] failed: {exc}") from exc
        mean_clean = float(np.mean([c for c, _ in reals]))
        base_cols = {"point": label, **_point_columns(point),
                     "n_realizations": campaign.n_realizations,
                     "mean_clean_qoc": mean_clean}
        if not attacks:
            rows.append({**base_cols, "attack": "none", "l_c": "", "l_p": "",
                         "mean_qoc_true_channel": mean_clean,
                         "ratio_true_channel": 1.0,
                         "mean_qoc_reported": mean_clean,
                         "ratio_reported": 1.0})
            continue
        for a_idx, atk in enumerate(attacks):
            true_vals = [pa[a_idx][0] for _, pa in reals]
            rep_vals = [pa[a_idx][1] for _, pa in reals]
            mean_true = float(np.mean(true_vals))
            mean_rep = float(np.mean(rep_vals))
            ratio = lambda v: v / mean_clean if mean_clean > 0 else 0.0
            rows.append({**base_cols, "attack": atk.kind,
                         "l_c": atk.l_c, "l_p": atk.l_p,
                         "mean_qoc_true_channel": mean_true,
                         "ratio_true_channel": ratio(mean_true),
                         "mean_qoc_reported": mean_rep,
                         "ratio_reported": ratio(mean_rep)})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "qoc_sweep.csv", rows)
        _write_manifest(out / "manifest.json", campaign, study="qoc_sweep")
    return rows


def _eigen_condition_samples(campaign, sim, attacks, point_idx, threads):
    """Pooled eigen samples for the clean condition and each attack."""
    def tensors(r):
        _, h, _ = _realization_network(sim, point_idx, r)
        return h

    clean_tensors = _parallel_map(tensors, range(campaign.n_realizations), threads)
    samples = {"clean": pool_eigenvalues(clean_tensors, campaign.svd_mode)}
    for a_idx, atk in enumerate(attacks):
        perturbed = [
            apply_attack(h, atk, _attack_rng(sim, atk, point_idx, r, a_idx))[0]
            for r, h in enumerate(clean_tensors)
        ]
        samples[attack_label(atk)] = pool_eigenvalues(perturbed, campaign.svd_mode)
    return samples


def run_eigen_study(campaign: Campaign, out_dir=None, threads: int = 1) -> dict:
    """Eigenvalue distribution study: zoo rankings, detection verdicts, the
    fitted Johnson-SU parameter track, fitted PDF/CDF curves on a 512-point
    grid, PDF peak locations, raw eigenvalue dumps, and (optionally) a
    best-fit grid over (N, sample size)."""
    ranking_rows, detection_rows, jsu_rows = [], [], []
    curve_rows, peak_rows, value_rows = [], [], []
    for point_idx, point in enumerate(sweep_points(campaign)):
        label = _point_label(point)
        try:
            sim = _sim_at_point(campaign.sim, point)
            attacks = _attacks_at_point(campaign.attacks, point)
            samples = _eigen_condition_samples(campaign, sim, attacks,
                                               point_idx, threads)
            rankings = {cond: best_fit(sample)
                        for cond, sample in samples.items()}
        except Exception as exc:
            raise RuntimeError(f"sweep point [{label}] failed: {exc}") from exc

        for cond, ranking in rankings.items():
            sample = samples[cond]
            for rank, res in enumerate(ranking, start=1):
                ranking_rows.append({
                    "point": label, "condition": cond, "rank": rank,
                    "family": res.family, "d_stat": res.d_stat,
                    "d_crit": res.d_crit, "accepted": res.accepted,
                    "log_likelihood": res.log_likelihood,
                    "failed": res.failed,
                    "params": " ".join(repr(float(p)) for p in np.atleast_1d(res.params)),
                })
                if res.family == "JohnsonSU" and not res.failed:
                    gamma, delta, xi, lam = [float(p) for p in res.params]
                    jsu_rows.append({
                        "point": label, "condition": cond,
                        "gamma": gamma, "delta": delta,
                        "lambda": lam, "xi": xi,
                        "d_stat": res.d_stat, "accepted": res.accepted,
                    })
            winner = ranking[0]
            values = sample.values
            for v in values:
                value_rows.append({"point": label, "condition": cond,
                                   "value": float(v)})
            if not winner.failed:
                fam = _family(winner.family)
                grid = np.linspace(values[0], values[-1], 512)
                with np.errstate(all="ignore"):
                    pdf = np.asarray(fam.pdf(grid, winner.params), dtype=float)
                    cdf = np.asarray(fam.cdf(grid, winner.params), dtype=float)
                ecdf = np.searchsorted(values, grid, side="right") / values.size
                for x, p, c, e in zip(grid, pdf, cdf, ecdf):
                    curve_rows.append({"point": label, "condition": cond,
                                       "family": winner.family,
                                       "x": float(x), "pdf": float(p),
                                       "cdf": float(c), "ecdf": float(e)})
                k = int(np.nanargmax(pdf))
                peak_rows.append({"point": label, "condition": cond,
                                  "family": winner.family,
                                  "x_peak": float(grid[k]),
                                  "pdf_peak": float(pdf[k])})

        baseline = rankings["clean"][0]
        for cond in samples:
            if cond == "clean":
                continue
            if baseline.failed or not baseline.accepted:
                detection_rows.append({"point": label, "condition": cond,
                                       "level": "Unavailable",
                                       "baseline_family": baseline.family,
                                       "observed_family": "",
                                       "baseline_d_on_observed": "",
                                       "max_param_drift": ""})
                continue
            verdict = detect(baseline, samples[cond],
                             drift_threshold=campaign.drift_threshold)
            detection_rows.append({
                "point": label, "condition": cond, "level": verdict.level,
                "baseline_family": verdict.baseline_family,
                "observed_family": verdict.observed_family,
                "baseline_d_on_observed": verdict.baseline_d_on_observed,
                "max_param_drift": float(np.max(verdict.param_drift)),
            })

    grid_rows = _sample_size_grid(campaign, threads) if campaign.eigen_sample_sizes else []

    tables = {
        "rankings": ranking_rows,
        "detections": detection_rows,
        "jsu_params": jsu_rows,
        "curves": curve_rows,
        "pdf_peaks": peak_rows,
        "eigenvalues": value_rows,
        "sample_size_grid": grid_rows,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "eigen_rankings.csv", ranking_rows)
        _write_csv(out / "eigen_detections.csv", detection_rows)
        _write_csv(out / "eigen_jsu_params.csv", jsu_rows)
        _write_csv(out / "eigen_curves.csv", curve_rows)
        _write_csv(out / "eigen_pdf_peaks.csv", peak_rows)
        _write_csv(out / "eigenvalues.csv", value_rows)
        if grid_rows:
            _write_csv(out / "eigen_sample_size_grid.csv", grid_rows)
        _write_manifest(out / "manifest.json", campaign, study="eigen_study")
    return tables


def _sample_size_grid(campaign: Campaign, threads: int) -> list:
    """Best-fit table over (N, pooled sample size), clean channels only."""
    from .statfit import EigenSample, channel_eigenvalues

    n_values = campaign.sweep.get("n_pairs", [campaign.sim.n_pairs])
    rows = []
    for n in n_values:
        sim = _sim_at_point(campaign.sim, {"n_pairs": n})
        for target in campaign.eigen_sample_sizes:
            n_real = math.ceil(target / sim.n_pairs)
            def tensors(r):
                _, h, _ = _realization_network(sim, 10_000 + target, r)
                return channel_eigenvalues(h, campaign.svd_mode)
            pooled = np.concatenate(
                _parallel_map(tensors, range(n_real), threads))[:target]
            ranking = best_fit(EigenSample(values=pooled,
                                           provenance=(n_real, sim.n_pairs,
                                                       sim.n_tx_antennas)))
            fams = [r.family for r in ranking]
            jsu = ranking[fams.index("JohnsonSU")]
            rows.append({
                "n_pairs": sim.n_pairs, "n_sigma": int(target),
                "best_family": ranking[0].family,
                "best_d": ranking[0].d_stat,
                "jsu_d": jsu.d_stat, "jsu_rank": fams.index("JohnsonSU") + 1,
                "d_crit": ranking[0].d_crit,
            })
    return rows


def _family(family_id: str):
    from .statfit import family_by_id
    return family_by_id(family_id)


def _write_csv(path: Path, rows: list) -> None:
    fieldnames: list = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_manifest(path: Path, campaign: Campaign, study: str) -> None:
    manifest = {
        "study": study,
        "package_version": __version__,
        "config": campaign.to_dict(),
        "config_sha256": campaign.config_hash(),
        "seed_scheme": (
            "network rng entropy = [sim.seed, point_index, realization, 0]; "
            "attack rng entropy = [sim.seed, attack.seed, point_index, "
            "realization, attack_index + 1]; all numpy default_rng (PCG64)"
        ),
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
