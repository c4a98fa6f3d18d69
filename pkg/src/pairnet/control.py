"""Power-bounded precoder controllers.

Two controllers stand in for any learned beamforming policy: maximum ratio
transmission (MRT) and the alternating weighted-MMSE (WMMSE) sum-rate
algorithm with per-pair power constraints, initialized at MRT so its weighted
sum rate can only improve on MRT's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netmodel import ConfigError, GraphModel, qoc

__all__ = [
    "PrecoderSet",
    "ControllerSpec",
    "WmmseInfo",
    "mrt_precoders",
    "wmmse_precoders",
    "controller_precoders",
]

_POWER_SLACK = 1e-9

_CONTROLLER_FIELDS = ("kind", "wmmse_max_iters", "wmmse_tol")


@dataclass
class ControllerSpec:
    kind: str = "WMMSE"
    wmmse_max_iters: int = 100
    wmmse_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in ("MRT", "WMMSE"):
            raise ConfigError(f"unknown controller kind {self.kind!r}")
        if int(self.wmmse_max_iters) != self.wmmse_max_iters or self.wmmse_max_iters < 1:
            raise ConfigError("wmmse_max_iters must be an integer >= 1")
        self.wmmse_max_iters = int(self.wmmse_max_iters)
        if not self.wmmse_tol > 0:
            raise ConfigError("wmmse_tol must be > 0")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _CONTROLLER_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "ControllerSpec":
        if not isinstance(data, dict):
            raise ConfigError("controller config must be a JSON object")
        unknown = set(data) - set(_CONTROLLER_FIELDS)
        if unknown:
            raise ConfigError(f"unknown controller config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class WmmseInfo:
    """Convergence diagnostics: objective and max per-pair power per iteration
    (index 0 is the MRT starting point)."""

    converged: bool
    n_iters: int
    objective: list[float]
    max_power: list[float]


@dataclass
class PrecoderSet:
    """One transmit precoder per pair, row n of ``q``; every row obeys the
    per-pair power bound ||q_n||^2 <= p_max (+1e-9 numerical slack)."""

    q: np.ndarray
    p_max: float
    info: WmmseInfo | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=complex)
        if self.q.ndim != 2:
            raise ValueError("precoder set must be an (N, N_t) matrix")
        if not np.all(np.isfinite(self.q)):
            raise ValueError("precoders must be finite")
        powers = np.sum(np.abs(self.q) ** 2, axis=1)
        if np.any(powers > self.p_max + _POWER_SLACK):
            raise ValueError("precoder power exceeds p_max")

    @property
    def n_pairs(self) -> int:
        return self.q.shape[0]

    def powers(self) -> np.ndarray:
        return np.sum(np.abs(self.q) ** 2, axis=1)


def mrt_precoders(g: GraphModel, p_max: float) -> PrecoderSet:
    """Full-power precoders aligned with each pair's desired channel; an
    all-zero channel yields an all-zero precoder."""
    h = g.desired_channels
    norms = np.linalg.norm(h, axis=1)
    q = np.zeros_like(h)
    nz = norms > 0
    q[nz] = np.sqrt(p_max) * h[nz] / norms[nz, None]
    return PrecoderSet(q=q, p_max=p_max)


def _solve_power_constrained(a_mat: np.ndarray, b_vec: np.ndarray,
                             p_max: float) -> np.ndarray:
    """argmin_q q^H A q - 2 Re(b^H q) subject to ||q||^2 <= p_max, A PSD.

    Solved through the eigendecomposition of A; the dual variable is bisected
    from the feasible side so the returned point never violates the bound.
    """
    if not np.any(b_vec):
        return np.zeros_like(b_vec)
    lam, u_mat = np.linalg.eigh(a_mat)
    lam = np.maximum(lam, 0.0)
    phi = u_mat.conj().T @ b_vec
    abs_phi2 = np.abs(phi) ** 2

    def power(mu: float) -> float:
        denom = lam + mu
        # zero modes with zero load contribute nothing
        mask = denom > 0
        if np.any(~mask & (abs_phi2 > 0)):
            return np.inf
        return float(np.sum(abs_phi2[mask] / denom[mask] ** 2))

    if power(0.0) <= p_max:
        mu = 0.0
    else:
        lo, hi = 0.0, float(np.linalg.norm(b_vec) / np.sqrt(p_max))
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if power(mid) > p_max:
                lo = mid
            else:
                hi = mid
        mu = hi
    denom = lam + mu
    coef = np.where(denom > 0, phi / np.where(denom > 0, denom, 1.0), 0.0)
    return u_mat @ coef


def wmmse_precoders(g: GraphModel, spec: ControllerSpec, p_max: float) -> PrecoderSet:
    """Alternating receive-scalar / MSE-weight / precoder updates maximizing
    the weighted sum rate under per-pair power bounds.

    Starts from MRT, which makes the returned objective no worse than MRT's.
    Non-convergence within ``wmmse_max_iters`` is not an error: the best
    iterate is returned and flagged in ``info``.
    """
    n, n_t = g.n_pairs, g.n_tx_antennas
    if not np.all(g.noise_power > 0):
        raise ValueError("WMMSE requires strictly positive noise powers")
    alpha = g.weights
    sigma2 = g.noise_power
    # c[i, k, :]: channel TX i -> RX k as the controller sees it (masked
    # interference off-graph, desired channels on the diagonal)
    c = g.a.copy()
    c[np.arange(n), np.arange(n), :] = g.desired_channels

    current = mrt_precoders(g, p_max)
    quad = current.q.copy()
    best_q = quad.copy()
    best_obj = qoc(g, current)
    objective = [best_obj]
    max_power = [float(np.max(current.powers()))]
    converged = False
    prev = best_obj

    for _ in range(spec.wmmse_max_iters):
        # receive scalars and MSE weights
        cross = np.einsum("ikt,it->ik", np.conj(c), quad)  # cross[i, k] = c_ik^H q_i
        total = np.sum(np.abs(cross) ** 2, axis=0) + sigma2
        direct = cross[np.arange(n), np.arange(n)]
        u = direct / total
        mse = 1.0 - np.abs(direct) ** 2 / total
        w = 1.0 / mse
        coef = alpha * w * np.abs(u) ** 2
        # per-pair quadratic: A_n = sum_k coef_k c[n,k] c[n,k]^H, b_n = alpha_n w_n u_n c[n,n]
        a_all = np.einsum("k,nkt,nks->nts", coef, c, np.conj(c))
        for i in range(n):
            b_vec = alpha[i] * w[i] * u[i] * c[i, i, :]
            quad[i] = _solve_power_constrained(a_all[i], b_vec, p_max)
        current = PrecoderSet(q=quad.copy(), p_max=p_max)
        obj = qoc(g, current)
        objective.append(obj)
        max_power.append(float(np.max(current.powers())))
        if obj > best_obj:
            best_obj = obj
            best_q = quad.copy()
        if abs(obj - prev) <= spec.wmmse_tol * max(1.0, abs(prev)):
            converged = True
            break
        prev = obj

    info = WmmseInfo(converged=converged, n_iters=len(objective) - 1,
                     objective=objective, max_power=max_power)
    return PrecoderSet(q=best_q, p_max=p_max, info=info)


def controller_precoders(g: GraphModel, spec: ControllerSpec, p_max: float) -> PrecoderSet:
    if spec.kind == "MRT":
        return mrt_precoders(g, p_max)
    return wmmse_precoders(g, spec, p_max)
