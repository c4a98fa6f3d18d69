"""Eigenvalue extraction, distribution fitting, and attack detection.

The detector's raw material is the set of singular values of the channel
tensor, pooled over many network realizations.  Candidate distributional
families are fitted by maximum likelihood (derivative-free simplex search
from moment-matched starts) and ranked by the one-sample Kolmogorov-Smirnov
statistic; a fit is acceptable when its KS statistic stays below the
Lilliefors critical value for estimated parameters.  Attack detection compares
the best-fitting family (and its parameters) before and after the tensor was
exposed.
"""

from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import ndtr

from .netmodel import ChannelTensor

__all__ = [
    "UnsupportedAlphaError",
    "CdfContractError",
    "EigenSample",
    "DistributionFamily",
    "FitResult",
    "DetectionVerdict",
    "DEFAULT_ZOO",
    "family_by_id",
    "channel_eigenvalues",
    "pool_eigenvalues",
    "empirical_cdf",
    "ks_statistic",
    "lilliefors_dcrit",
    "johnson_su_pdf",
    "johnson_su_logpdf",
    "johnson_su_cdf",
    "fit_family",
    "best_fit",
    "detect",
]


class UnsupportedAlphaError(ValueError):
    """Requested a significance level with no tabulated critical-value row."""


class CdfContractError(ValueError):
    """A hypothesized CDF returned values outside [0, 1]."""


@dataclass
class EigenSample:
    """Pooled channel eigenvalues: sorted ascending, nonnegative.

    ``provenance`` records (number of network realizations, N, N_t) when the
    sample came from the simulator; ad hoc samples may leave it None.
    """

    values: np.ndarray
    n_sigma: int = 0
    provenance: tuple | None = None

    def __post_init__(self) -> None:
        v = np.sort(np.asarray(self.values, dtype=float))
        if v.size == 0:
            raise ValueError("eigen sample must be nonempty")
        if not np.all(np.isfinite(v)):
            raise ValueError("eigen sample must be finite")
        if v[0] < 0:
            raise ValueError("eigenvalues are nonnegative")
        self.values = v
        self.n_sigma = int(v.size)


def _values(sample) -> np.ndarray:
    """Accept an EigenSample or any 1-D array of reals; return sorted values."""
    if isinstance(sample, EigenSample):
        return sample.values
    v = np.sort(np.asarray(sample, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("sample must be nonempty")
    if not np.all(np.isfinite(v)):
        raise ValueError("sample must be finite")
    return v


def channel_eigenvalues(h: ChannelTensor, svd_mode: str = "unfold") -> np.ndarray:
    """The N singular values of the channel tensor, descending.

    For a single TX antenna this is the SVD of the N x N channel matrix; with
    more antennas the default flattens the tensor to its N x (N * N_t) mode-1
    unfolding (``svd_mode="slice0"`` instead keeps only antenna 0).
    """
    mat = h.h
    n = mat.shape[0]
    if svd_mode == "slice0":
        flat = mat[:, :, 0]
    elif svd_mode == "unfold":
        flat = mat.reshape(n, -1)
    else:
        raise ValueError("svd_mode must be 'slice0' or 'unfold'")
    return np.linalg.svd(flat, compute_uv=False)


def pool_eigenvalues(tensors, svd_mode: str = "unfold") -> EigenSample:
    """Concatenate the eigenvalues of several realizations into one sample."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("need at least one tensor")
    vals = np.concatenate([channel_eigenvalues(t, svd_mode) for t in tensors])
    n, n_t = tensors[0].n_pairs, tensors[0].n_tx_antennas
    return EigenSample(values=vals, provenance=(len(tensors), n, n_t))


def empirical_cdf(sample, x):
    """Right-continuous step ECDF: fraction of sample values <= x."""
    v = _values(sample)
    pos = np.searchsorted(v, np.asarray(x, dtype=float), side="right")
    out = pos / v.size
    if np.isscalar(x):
        return float(out)
    return out


def ks_statistic(sample, cdf) -> float:
    """One-sample two-sided KS statistic against an evaluable CDF.

    For sorted values x_1..x_n this is the exact supremum
    max_i max(i/n - F(x_i), F(x_i) - (i-1)/n) of |ECDF - F|.
    """
    v = _values(sample)
    n = v.size
    f = np.asarray(cdf(v), dtype=float)
    if f.shape != v.shape:
        raise CdfContractError("cdf must return one value per sample point")
    if np.any(~np.isfinite(f)) or np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise CdfContractError("cdf values must lie in [0, 1]")
    steps = np.arange(1, n + 1) / n
    d_plus = np.max(steps - f)
    d_minus = np.max(f - (steps - 1.0 / n))
    return float(max(d_plus, d_minus))


def lilliefors_dcrit(n_sigma: int, alpha: float = 0.01) -> float:
    """Critical KS value when parameters are estimated from the sample,
    alpha = 0.01 row: 1.035 / ((n + 0.83) / sqrt(n) - 0.01)."""
    if alpha != 0.01:
        raise UnsupportedAlphaError(
            f"only alpha = 0.01 is supported, got {alpha}")
    if n_sigma < 5:
        raise ValueError("critical value defined for n_sigma >= 5")
    root = math.sqrt(n_sigma)
    return 1.035 / ((n_sigma + 0.83) / root - 0.01)


def _jsu_check(delta: float, lam: float) -> None:
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    if not delta > 0:
        raise ValueError("delta must be > 0")


def johnson_su_pdf(x, gamma: float, delta: float, lam: float, xi: float):
    """Johnson's SU density: a sinh^-1 transform of a standard normal with
    shape (gamma, delta), scale lambda and location xi."""
    _jsu_check(delta, lam)
    z = (np.asarray(x, dtype=float) - xi) / lam
    core = gamma + delta * np.arcsinh(z)
    out = (delta / (lam * math.sqrt(2.0 * math.pi))
           / np.sqrt(1.0 + z * z) * np.exp(-0.5 * core * core))
    if np.isscalar(x):
        return float(out)
    return out


def johnson_su_logpdf(x, gamma: float, delta: float, lam: float, xi: float):
    _jsu_check(delta, lam)
    z = (np.asarray(x, dtype=float) - xi) / lam
    core = gamma + delta * np.arcsinh(z)
    out = (math.log(delta) - math.log(lam) - 0.5 * math.log(2.0 * math.pi)
           - 0.5 * np.log1p(z * z) - 0.5 * core * core)
    if np.isscalar(x):
        return float(out)
    return out


def johnson_su_cdf(x, gamma: float, delta: float, lam: float, xi: float):
    """Johnson's SU CDF, Phi(gamma + delta * asinh((x - xi) / lambda))."""
    _jsu_check(delta, lam)
    z = (np.asarray(x, dtype=float) - xi) / lam
    out = ndtr(gamma + delta * np.arcsinh(z))
    if np.isscalar(x):
        return float(out)
    return out


class DistributionFamily:
    """One candidate family: id, parameter count, and scipy-backed cdf/logpdf.

    Parameters are packed as (shapes..., loc, scale) in scipy order.
    """

    def __init__(self, family_id: str, dist, n_params: int):
        self.id = family_id
        self.dist = dist
        self.n_params = n_params

    def __repr__(self) -> str:
        return f"DistributionFamily({self.id!r})"

    def _split(self, params):
        params = np.asarray(params, dtype=float)
        shapes = tuple(params[:-2])
        return shapes, params[-2], params[-1]

    def cdf(self, x, params):
        shapes, loc, scale = self._split(params)
        return self.dist.cdf(x, *shapes, loc=loc, scale=scale)

    def pdf(self, x, params):
        shapes, loc, scale = self._split(params)
        return self.dist.pdf(x, *shapes, loc=loc, scale=scale)

    def logpdf(self, x, params):
        shapes, loc, scale = self._split(params)
        if scale <= 0:
            return np.full(np.shape(x), -np.inf)
        return self.dist.logpdf(x, *shapes, loc=loc, scale=scale)

    def fit_start(self, x: np.ndarray) -> np.ndarray:
        """Moment-matched starting point; falls back to unit shapes around the
        sample mean/spread."""
        try:
            start = np.asarray(self.dist._fitstart(x), dtype=float)
            if start.size == self.n_params and np.all(np.isfinite(start)):
                return start
        except Exception:
            pass
        spread = float(np.std(x))
        spread = spread if spread > 0 else 1.0
        return np.asarray([1.0] * (self.n_params - 2)
                          + [float(np.mean(x)), spread])


class _JohnsonSUFamily(DistributionFamily):
    """Johnson's SU backed by this module's closed forms; parameter order
    (gamma, delta, xi, lambda) matches scipy's (a, b, loc, scale)."""

    def __init__(self):
        super().__init__("JohnsonSU", stats.johnsonsu, 4)

    def cdf(self, x, params):
        g, d, loc, scale = np.asarray(params, dtype=float)
        return johnson_su_cdf(x, gamma=g, delta=d, lam=scale, xi=loc)

    def pdf(self, x, params):
        g, d, loc, scale = np.asarray(params, dtype=float)
        return johnson_su_pdf(x, gamma=g, delta=d, lam=scale, xi=loc)

    def logpdf(self, x, params):
        g, d, loc, scale = np.asarray(params, dtype=float)
        if scale <= 0 or d <= 0:
            return np.full(np.shape(x), -np.inf)
        return johnson_su_logpdf(x, gamma=g, delta=d, lam=scale, xi=loc)


DEFAULT_ZOO = [
    DistributionFamily("Normal", stats.norm, 2),
    DistributionFamily("LogNormal", stats.lognorm, 3),
    DistributionFamily("Exponential", stats.expon, 2),
    DistributionFamily("Gamma", stats.gamma, 3),
    DistributionFamily("WeibullMin", stats.weibull_min, 3),
    DistributionFamily("Cauchy", stats.cauchy, 2),
    DistributionFamily("HalfCauchy", stats.halfcauchy, 2),
    DistributionFamily("Laplace", stats.laplace, 2),
    DistributionFamily("Logistic", stats.logistic, 2),
    DistributionFamily("StudentT", stats.t, 3),
    _JohnsonSUFamily(),
    DistributionFamily("JohnsonSB", stats.johnsonsb, 4),
    DistributionFamily("GEV", stats.genextreme, 3),
    DistributionFamily("InverseGaussian", stats.invgauss, 3),
    DistributionFamily("Rayleigh", stats.rayleigh, 2),
    DistributionFamily("Pareto", stats.pareto, 3),
]

_ZOO_BY_ID = {f.id: f for f in DEFAULT_ZOO}


def family_by_id(family_id: str) -> DistributionFamily:
    try:
        return _ZOO_BY_ID[family_id]
    except KeyError:
        raise ValueError(f"unknown distribution family {family_id!r}") from None


@dataclass
class FitResult:
    """Outcome of fitting one family: parameters, KS statistic D, critical
    value, and whether the family is an acceptable description of the data.

    ``failed`` marks optimizer divergence or a degenerate sample; such results
    carry d_stat = 1 and drop to the bottom of any ranking.
    """

    family: str
    params: np.ndarray
    d_stat: float
    d_crit: float
    accepted: bool
    log_likelihood: float
    failed: bool = False

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": [float(p) for p in np.atleast_1d(self.params)],
            "d_stat": self.d_stat,
            "d_crit": self.d_crit,
            "accepted": self.accepted,
            "log_likelihood": self.log_likelihood,
            "failed": self.failed,
        }


@dataclass
class DetectionVerdict:
    """Three-level alarm from comparing the observed eigenvalue distribution
    against an accepted clean baseline."""

    level: str
    baseline_family: str
    observed_family: str
    baseline_d_on_observed: float
    param_drift: np.ndarray
    drift_threshold: float

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "baseline_family": self.baseline_family,
            "observed_family": self.observed_family,
            "baseline_d_on_observed": self.baseline_d_on_observed,
            "param_drift": [float(d) for d in np.atleast_1d(self.param_drift)],
            "drift_threshold": self.drift_threshold,
        }


def _nll(family: DistributionFamily, x: np.ndarray, params) -> float:
    with np.errstate(all="ignore"):
        lp = family.logpdf(x, params)
        total = np.sum(lp)
    if not np.isfinite(total):
        return np.inf
    return float(-total)


def _jittered_starts(family: DistributionFamily, x: np.ndarray,
                     n_starts: int) -> list:
    base = family.fit_start(x)
    starts = [base]
    spread = float(np.std(x))
    spread = spread if spread > 0 else 1.0
    for k in range(1, n_starts):
        rng = np.random.default_rng([zlib.crc32(family.id.encode()), k])
        jitter = base * (1.0 + 0.25 * rng.standard_normal(base.size))
        jitter[base == 0] = 0.25 * spread * rng.standard_normal(np.sum(base == 0))
        starts.append(jitter)
    return starts


def _failed_result(family: DistributionFamily, n: int) -> FitResult:
    return FitResult(family=family.id,
                     params=np.full(family.n_params, np.nan),
                     d_stat=1.0,
                     d_crit=lilliefors_dcrit(n),
                     accepted=False,
                     log_likelihood=-np.inf,
                     failed=True)


def fit_family(sample, family: DistributionFamily, n_starts: int = 5) -> FitResult:
    """Maximum-likelihood fit of one family, scored by the KS statistic.

    Nelder-Mead simplex search from a moment-matched start plus jittered
    restarts (deterministic per family).  Divergent or degenerate fits return
    a failed result instead of raising.
    """
    x = _values(sample)
    n = x.size
    if n < family.n_params + 2:
        raise ValueError(
            f"need at least {family.n_params + 2} samples to fit {family.id}")
    d_crit = lilliefors_dcrit(n)
    if np.ptp(x) == 0:
        return _failed_result(family, n)

    best_params, best_nll = None, np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for start in _jittered_starts(family, x, n_starts):
            try:
                res = optimize.minimize(
                    lambda p: _nll(family, x, p), start,
                    method="Nelder-Mead",
                    options={"xatol": 1e-10, "fatol": 1e-10,
                             "maxfev": 2000 * family.n_params})
            except Exception:
                continue
            if np.isfinite(res.fun) and res.fun < best_nll:
                best_nll = float(res.fun)
                best_params = np.asarray(res.x, dtype=float)
    if best_params is None:
        return _failed_result(family, n)

    try:
        with np.errstate(all="ignore"):
            d_stat = ks_statistic(x, lambda t: family.cdf(t, best_params))
    except CdfContractError:
        return _failed_result(family, n)
    return FitResult(family=family.id,
                     params=best_params,
                     d_stat=d_stat,
                     d_crit=d_crit,
                     accepted=bool(d_stat <= d_crit),
                     log_likelihood=-best_nll)


def best_fit(sample, zoo=None) -> list:
    """Fit every family in the zoo and rank ascending by the KS statistic.

    The head of the ranking is the min-max winner; its ``accepted`` flag
    reports whether it clears the Lilliefors critical value.  Ties break by
    higher log-likelihood, then family id.
    """
    if zoo is None:
        zoo = DEFAULT_ZOO
    zoo = list(zoo)
    if not zoo:
        raise ValueError("zoo must be nonempty")
    results = [fit_family(sample, fam) for fam in zoo]
    results.sort(key=lambda r: (r.d_stat, -r.log_likelihood, r.family))
    return results


def detect(baseline: FitResult, observed, zoo=None,
           drift_threshold: float = 0.25) -> DetectionVerdict:
    """Compare the observed sample against an accepted clean baseline fit.

    StrongAlarm: the min-max winner changed family, or the baseline family is
    rejected on the observed data.  WeakAlarm: same family but some parameter
    moved by more than ``drift_threshold`` relative to the baseline.  Clean
    otherwise.
    """
    if baseline.failed or not baseline.accepted:
        raise ValueError("detection requires an accepted baseline fit")
    ranking = best_fit(observed, zoo)
    winner = ranking[0]
    refit = fit_family(observed, family_by_id(baseline.family))
    base_params = np.atleast_1d(np.asarray(baseline.params, dtype=float))
    if refit.failed:
        drift = np.full(base_params.size, np.inf)
    else:
        drift = (np.abs(refit.params - base_params)
                 / np.maximum(np.abs(base_params), 1e-12))
    if winner.family != baseline.family or refit.failed or not refit.accepted:
        level = "StrongAlarm"
    elif np.any(drift > drift_threshold):
        level = "WeakAlarm"
    else:
        level = "Clean"
    return DetectionVerdict(level=level,
                            baseline_family=baseline.family,
                            observed_family=winner.family,
                            baseline_d_on_observed=refit.d_stat,
                            param_drift=drift,
                            drift_threshold=drift_threshold)
