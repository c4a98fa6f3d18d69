"""Adversarial perturbations of the channel tensor.

Four attacks plus three heuristic baselines, all operating directly on the
complex channel tensor and returning a perturbed copy together with an audit
report.  Naming follows the adversary classes: ``bc_*`` attacks are
count-limited (the adversary may touch at most floor(N * l_c) channels),
``bp_*`` attacks are budget-limited (total gain change bounded by
P_a = l_p * sum of desired-channel gains).  Vertex attacks hit desired
channels (tensor diagonal), edge attacks hit interference channels.

Channel "gain" is the l2 norm of the per-link antenna vector; gain changes
rescale the vector radially so every element keeps its phase.  The
count-limited attacks keep perturbed gains inside the clean desired-gain range
(above the minimum for vertex targets, below the maximum for edge targets) to
stay under plausible detection thresholds; ``enforce_limits=False`` drops that
restriction and zeroes the targets outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netmodel import ChannelTensor, ConfigError

__all__ = [
    "ATTACK_KINDS",
    "AttackConfig",
    "AttackReport",
    "channel_gain",
    "bc_vertex",
    "bc_edge",
    "bp_vertex",
    "bp_edge",
    "upper_bound_bc",
    "single_bc",
    "uniform_bp",
    "apply_attack",
]

ATTACK_KINDS = (
    "BcVertex",
    "BcEdge",
    "BpVertex",
    "BpEdge",
    "UpperBoundBc",
    "SingleBc",
    "UniformBp",
)

_ATTACK_FIELDS = ("kind", "l_c", "l_p", "enforce_limits", "seed",
                  "nolimit_edge_scale", "adversary_antennas")


@dataclass
class AttackConfig:
    """Which attack to run and with what intensity.

    ``l_c`` is meaningful for the count-limited kinds (and UpperBoundBc),
    ``l_p`` for the budget-limited kinds (and UniformBp); SingleBc uses
    neither.  ``adversary_antennas`` caps how many channels the adversary can
    hit simultaneously (None = never binding).  ``nolimit_edge_scale`` must be
    supplied to run BcEdge with ``enforce_limits=False`` (zeroing interference
    would help the victim, so an explicit target gain is required).
    """

    kind: str
    l_c: float = 0.0
    l_p: float = 0.0
    enforce_limits: bool = True
    seed: int = 0
    nolimit_edge_scale: float | None = None
    adversary_antennas: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        for name in ("l_c", "l_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        self.seed = int(self.seed)
        if self.nolimit_edge_scale is not None and not self.nolimit_edge_scale >= 0:
            raise ConfigError("nolimit_edge_scale must be >= 0")
        if self.adversary_antennas is not None and self.adversary_antennas < 1:
            raise ConfigError("adversary_antennas must be >= 1")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _ATTACK_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "AttackConfig":
        if not isinstance(data, dict):
            raise ConfigError("attack config must be a JSON object")
        unknown = set(data) - set(_ATTACK_FIELDS)
        if unknown:
            raise ConfigError(f"unknown attack config keys: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("attack config requires a 'kind'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class AttackReport:
    """Audit trail: which tensor coordinates changed, by what perturbation
    signal, and how much of the gain budget was spent.

    ``budget_total`` is None for attacks without a power budget; ``spent`` is
    the summed absolute gain change in either case.
    """

    attacked_indices: list
    perturbation_signals: np.ndarray
    budget_total: float | None
    budget_spent: float
    limits_enforced: bool
    constraint_violations: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if len({tuple(ix) for ix in self.attacked_indices}) != len(self.attacked_indices):
            raise ValueError("attacked indices must be distinct")
        if (self.budget_total is not None
                and self.budget_spent > self.budget_total + 1e-9):
            raise ValueError("budget overspent")

    def to_dict(self) -> dict:
        sig = np.asarray(self.perturbation_signals)
        return {
            "attacked_indices": [list(map(int, ix)) for ix in self.attacked_indices],
            "perturbation_signals": {
                "re": sig.real.tolist(),
                "im": sig.imag.tolist(),
            },
            "budget_total": self.budget_total,
            "budget_spent": self.budget_spent,
            "limits_enforced": self.limits_enforced,
            "constraint_violations": list(self.constraint_violations),
        }


def channel_gain(h_vec) -> float:
    """Scalar gain of one link: l2 norm of its antenna vector (|h| for a
    single antenna)."""
    return float(np.linalg.norm(np.asarray(h_vec)))


def _diag_gains(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    return np.linalg.norm(h[np.arange(n), np.arange(n), :], axis=1)


def _offdiag_coords(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _set_gain(vec: np.ndarray, target: float) -> np.ndarray:
    """Rescale a channel vector radially to the target gain; phases of nonzero
    elements are untouched.  A zero vector gets the target on antenna 0."""
    g = np.linalg.norm(vec)
    if g == 0.0:
        out = np.zeros_like(vec)
        if target > 0:
            out[0] = target
        return out
    return vec * (target / g)


def _empty_report(limits: bool = True, budget: float | None = None) -> AttackReport:
    return AttackReport(attacked_indices=[],
                        perturbation_signals=np.zeros((0, 1), dtype=complex),
                        budget_total=budget, budget_spent=0.0,
                        limits_enforced=limits)


def _report(h_old: np.ndarray, h_new: np.ndarray, indices: list,
            budget: float | None, limits: bool,
            violations: list | None = None) -> AttackReport:
    signals = np.asarray([h_new[i, j, :] - h_old[i, j, :] for i, j in indices],
                         dtype=complex)
    if signals.size == 0:
        signals = np.zeros((0, h_old.shape[2]), dtype=complex)
    gains_old = np.asarray([np.linalg.norm(h_old[i, j, :]) for i, j in indices])
    gains_new = np.asarray([np.linalg.norm(h_new[i, j, :]) for i, j in indices])
    spent = float(np.sum(np.abs(gains_new - gains_old))) if indices else 0.0
    return AttackReport(attacked_indices=list(indices),
                        perturbation_signals=signals,
                        budget_total=budget,
                        budget_spent=spent,
                        limits_enforced=limits,
                        constraint_violations=list(violations or []))


def bc_vertex(h: ChannelTensor, l_c: float, rng: np.random.Generator,
              enforce_limits: bool = True,
              adversary_antennas: int | None = None):
    """Count-limited attack on desired channels.

    floor(N * l_c) distinct diagonal channels, drawn uniformly, are pulled
    down to the minimum clean desired gain (phases preserved); with limits off
    they are zeroed outright.
    """
    n = h.n_pairs
    cap = n if adversary_antennas is None else min(n, adversary_antennas)
    n_a = min(int(math.floor(n * l_c)), cap)
    if n_a == 0:
        return h.copy(), _empty_report(limits=enforce_limits)
    old = h.h
    new = old.copy()
    gain_min = float(np.min(_diag_gains(old)))
    chosen = sorted(int(i) for i in rng.choice(n, size=n_a, replace=False))
    for i in chosen:
        target = gain_min if enforce_limits else 0.0
        new[i, i, :] = _set_gain(old[i, i, :], target)
    indices = [(i, i) for i in chosen]
    violations = []
    if enforce_limits:
        for i in chosen:
            if np.linalg.norm(new[i, i, :]) < gain_min * (1.0 - 1e-9):
                violations.append(f"gain below floor at ({i}, {i})")
    return ChannelTensor(new), _report(old, new, indices, None, enforce_limits,
                                       violations)


def bc_edge(h: ChannelTensor, l_c: float, rng: np.random.Generator,
            enforce_limits: bool = True,
            nolimit_edge_scale: float | None = None,
            adversary_antennas: int | None = None):
    """Count-limited attack on interference channels.

    floor(N * l_c) distinct off-diagonal channels, drawn uniformly over all
    N^2 - N of them, are raised to the maximum clean desired gain (phases
    preserved).  The floor(N * l_c) count already embodies the per-edge
    fairness rescaling: (N^2 - N) * l_c / (N - 1) = N * l_c.  Running without
    limits requires an explicit ``nolimit_edge_scale`` target gain, since
    zeroing interference would favor the victim.
    """
    n = h.n_pairs
    if n < 2:
        raise ValueError("edge attacks need at least 2 pairs")
    if not enforce_limits and nolimit_edge_scale is None:
        raise ValueError("BcEdge without limits requires nolimit_edge_scale")
    coords = _offdiag_coords(n)
    cap = len(coords) if adversary_antennas is None else min(len(coords), adversary_antennas)
    n_a = min(int(math.floor(n * l_c)), cap)
    if n_a == 0:
        return h.copy(), _empty_report(limits=enforce_limits)
    old = h.h
    new = old.copy()
    gain_max = float(np.max(_diag_gains(old)))
    target = gain_max if enforce_limits else float(nolimit_edge_scale)
    picks = rng.choice(len(coords), size=n_a, replace=False)
    indices = [coords[int(k)] for k in sorted(int(p) for p in picks)]
    for i, j in indices:
        new[i, j, :] = _set_gain(old[i, j, :], target)
    violations = []
    if enforce_limits:
        for i, j in indices:
            if np.linalg.norm(new[i, j, :]) > gain_max + 1e-12:
                violations.append(f"gain above cap at ({i}, {j})")
    return ChannelTensor(new), _report(old, new, indices, None, enforce_limits,
                                       violations)


def bp_vertex(h: ChannelTensor, l_p: float,
              adversary_antennas: int | None = None):
    """Budget-limited attack on desired channels.

    Budget P_a = l_p * sum of clean desired gains.  If the clean max-min gain
    gap already exceeds P_a, the whole budget is dumped on the single
    strongest channel; otherwise channels are pulled down to the clean minimum
    gain greedily, strongest first, until the next pull would overdraw.
    """
    n = h.n_pairs
    old = h.h
    new = old.copy()
    gains = _diag_gains(old)
    gain_min = float(np.min(gains))
    gain_max = float(np.max(gains))
    budget = float(l_p * np.sum(gains))
    indices: list = []
    if budget > 0 and gain_max - gain_min > budget:
        i = int(np.argmax(gains))
        new[i, i, :] = _set_gain(old[i, i, :], gains[i] - budget)
        indices = [(i, i)]
    elif budget > 0:
        remaining = budget
        cap = n if adversary_antennas is None else min(n, adversary_antennas)
        current = gains.copy()
        visited = np.zeros(n, dtype=bool)
        while len(indices) < cap and not visited.all():
            masked = np.where(visited, -np.inf, current)
            i = int(np.argmax(masked))
            charge = current[i] - gain_min
            if remaining - charge < 0:
                break
            new[i, i, :] = _set_gain(old[i, i, :], gain_min)
            current[i] = gain_min
            visited[i] = True
            remaining -= charge
            indices.append((i, i))
    return ChannelTensor(new), _report(old, new, indices, budget, True)


def bp_edge(h: ChannelTensor, l_p: float,
            adversary_antennas: int | None = None):
    """Budget-limited attack on interference channels.

    Same budget as :func:`bp_vertex`.  If the gap between the clean max
    desired gain and the min interference gain exceeds P_a, the whole budget
    raises that single weakest interference channel; otherwise interference
    channels are raised to the clean max desired gain greedily, weakest
    first, until the next raise would overdraw.
    """
    n = h.n_pairs
    if n < 2:
        raise ValueError("edge attacks need at least 2 pairs")
    old = h.h
    new = old.copy()
    diag_max = float(np.max(_diag_gains(old)))
    budget = float(l_p * np.sum(_diag_gains(old)))
    coords = _offdiag_coords(n)
    gains = np.asarray([np.linalg.norm(old[i, j, :]) for i, j in coords])
    indices: list = []
    if budget > 0 and diag_max - float(np.min(gains)) > budget:
        k = int(np.argmin(gains))
        i, j = coords[k]
        new[i, j, :] = _set_gain(old[i, j, :], gains[k] + budget)
        indices = [(i, j)]
    elif budget > 0:
        remaining = budget
        cap = len(coords) if adversary_antennas is None else min(len(coords), adversary_antennas)
        current = gains.copy()
        visited = np.zeros(len(coords), dtype=bool)
        while len(indices) < cap and not visited.all():
            masked = np.where(visited, np.inf, current)
            k = int(np.argmin(masked))
            charge = diag_max - current[k]
            if charge <= 0:
                break  # nothing left below the target gain
            if remaining - charge < 0:
                break
            i, j = coords[k]
            new[i, j, :] = _set_gain(old[i, j, :], diag_max)
            current[k] = diag_max
            visited[k] = True
            remaining -= charge
            indices.append((i, j))
    return ChannelTensor(new), _report(old, new, indices, budget, True)


def upper_bound_bc(h: ChannelTensor, l_c: float):
    """Benchmark attack: zero the floor(N * l_c) strongest desired channels."""
    n = h.n_pairs
    n_a = int(math.floor(n * l_c))
    old = h.h
    new = old.copy()
    if n_a == 0:
        return h.copy(), _empty_report()
    gains = _diag_gains(old)
    order = sorted(range(n), key=lambda i: (-gains[i], i))
    chosen = sorted(order[:n_a])
    for i in chosen:
        new[i, i, :] = 0.0
    indices = [(i, i) for i in chosen]
    return ChannelTensor(new), _report(old, new, indices, None, False)


def single_bc(h: ChannelTensor, rng: np.random.Generator):
    """Benchmark attack: zero one uniformly chosen desired channel."""
    n = h.n_pairs
    i = int(rng.integers(n))
    old = h.h
    new = old.copy()
    new[i, i, :] = 0.0
    return ChannelTensor(new), _report(old, new, [(i, i)], None, False)


def uniform_bp(h: ChannelTensor, l_p: float, rng: np.random.Generator,
               n_channels: int | None = None, budget: float | None = None):
    """Benchmark attack: spread the budget evenly over randomly chosen desired
    channels.

    K = max(1, floor(N * l_p)) channels are drawn without replacement and each
    has its gain reduced by P_a / K, floored at zero.  ``n_channels`` and
    ``budget`` override the derived values for direct control.
    """
    n = h.n_pairs
    old = h.h
    new = old.copy()
    gains = _diag_gains(old)
    k = max(1, int(math.floor(n * l_p))) if n_channels is None else int(n_channels)
    k = min(k, n)
    p_a = float(l_p * np.sum(gains)) if budget is None else float(budget)
    chosen = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
    step = p_a / k
    for i in chosen:
        new[i, i, :] = _set_gain(old[i, i, :], max(0.0, gains[i] - step))
    indices = [(i, i) for i in chosen]
    return ChannelTensor(new), _report(old, new, indices, p_a, True)


def apply_attack(h: ChannelTensor, cfg: AttackConfig,
                 rng: np.random.Generator | None = None):
    """Dispatch one configured attack; the RNG defaults to ``cfg.seed``."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    kind = cfg.kind
    if kind == "BcVertex":
        return bc_vertex(h, cfg.l_c, rng, enforce_limits=cfg.enforce_limits,
                         adversary_antennas=cfg.adversary_antennas)
    if kind == "BcEdge":
        return bc_edge(h, cfg.l_c, rng, enforce_limits=cfg.enforce_limits,
                       nolimit_edge_scale=cfg.nolimit_edge_scale,
                       adversary_antennas=cfg.adversary_antennas)
    if kind == "BpVertex":
        return bp_vertex(h, cfg.l_p, adversary_antennas=cfg.adversary_antennas)
    if kind == "BpEdge":
        return bp_edge(h, cfg.l_p, adversary_antennas=cfg.adversary_antennas)
    if kind == "UpperBoundBc":
        return upper_bound_bc(h, cfg.l_c)
    if kind == "SingleBc":
        return single_bc(h, rng)
    if kind == "UniformBp":
        return uniform_bp(h, cfg.l_p, rng)
    raise ConfigError(f"unknown attack kind {kind!r}")
