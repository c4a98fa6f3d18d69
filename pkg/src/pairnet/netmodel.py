"""Network geometry, channel generation, and the interference-graph rate model.

An N-pair MISO network is modelled as a directed graph: vertex n is the n-th
transceiver pair (its feature row holds the desired channel, the pair weight
and the receiver noise power), and a directed edge (i, n) carries the
interference channel from TX i into RX n whenever the two are closer than a
distance threshold.  All randomness flows through an explicit
``numpy.random.Generator`` so every artifact is reproducible from a seed.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "SimConfig",
    "NetworkTopology",
    "ChannelTensor",
    "GraphModel",
    "path_loss_db",
    "sample_topology",
    "sample_channels",
    "build_graph",
    "generate_network",
    "sinr",
    "sinr_all",
    "qoc",
    "qoc_per_pair",
]


class ConfigError(ValueError):
    """Invalid or malformed configuration (bad value, unknown JSON key, ...)."""


_SIM_FIELDS = (
    "n_pairs",
    "n_tx_antennas",
    "area_width_m",
    "area_height_m",
    "d_min_m",
    "d_max_m",
    "interference_threshold_m",
    "snr_db",
    "p_max",
    "antenna_gain_dbi",
    "shadowing_sigma_db",
    "weights",
    "noise_power",
    "pathloss_log_base",
    "seed",
)


@dataclass
class SimConfig:
    """Scenario description: geometry, channel statistics and rate-model knobs.

    ``weights`` and ``noise_power`` default to all-ones and to
    ``p_max * 10**(-snr_db/10)`` per pair, respectively.  ``pathloss_log_base``
    selects the logarithm base of the path-loss law (2 as printed in the source
    model, 10 for the conventional reading).
    """

    n_pairs: int
    n_tx_antennas: int
    area_width_m: float
    area_height_m: float
    d_min_m: float
    d_max_m: float
    interference_threshold_m: float
    snr_db: float
    p_max: float
    antenna_gain_dbi: float = 9.0
    shadowing_sigma_db: float = 0.0
    weights: list[float] | None = None
    noise_power: list[float] | None = None
    pathloss_log_base: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 1:
            raise ConfigError("n_pairs must be an integer >= 1")
        if int(self.n_tx_antennas) != self.n_tx_antennas or self.n_tx_antennas < 1:
            raise ConfigError("n_tx_antennas must be an integer >= 1")
        self.n_pairs = int(self.n_pairs)
        self.n_tx_antennas = int(self.n_tx_antennas)
        for name in ("area_width_m", "area_height_m", "d_min_m", "d_max_m",
                     "interference_threshold_m", "p_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.d_min_m > self.d_max_m:
            raise ConfigError("d_min_m must not exceed d_max_m")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("shadowing_sigma_db must be >= 0")
        if self.pathloss_log_base not in (2, 2.0, 10, 10.0):
            raise ConfigError("pathloss_log_base must be 2 or 10")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        self.seed = int(self.seed)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.n_pairs,) or not np.all(w > 0):
                raise ConfigError("weights must be n_pairs positive reals")
            self.weights = [float(v) for v in w]
        if self.noise_power is not None:
            s = np.asarray(self.noise_power, dtype=float)
            if s.shape != (self.n_pairs,) or not np.all(s > 0):
                raise ConfigError("noise_power must be n_pairs positive reals")
            self.noise_power = [float(v) for v in s]

    def weight_vector(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.n_pairs)
        return np.asarray(self.weights, dtype=float)

    def noise_vector(self, h: "ChannelTensor | None" = None) -> np.ndarray:
        """Per-pair noise power.

        With no explicit override the noise floor is calibrated to the
        network: p_max * mean desired-channel power * 10**(-snr_db/10), so a
        full-power pair sits near the configured SNR.  Passing no tensor
        leaves the channel scale at 1.
        """
        if self.noise_power is not None:
            return np.asarray(self.noise_power, dtype=float)
        scale = 1.0
        if h is not None:
            n = h.n_pairs
            diag = h.h[np.arange(n), np.arange(n), :]
            mean_power = float(np.mean(np.sum(np.abs(diag) ** 2, axis=1)))
            if mean_power > 0:
                scale = mean_power
        return np.full(self.n_pairs,
                       self.p_max * scale * 10.0 ** (-self.snr_db / 10.0))

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _SIM_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        if not isinstance(data, dict):
            raise ConfigError("simulation config must be a JSON object")
        unknown = set(data) - set(_SIM_FIELDS)
        if unknown:
            raise ConfigError(f"unknown simulation config keys: {sorted(unknown)}")
        missing = {"n_pairs", "n_tx_antennas", "area_width_m", "area_height_m",
                   "d_min_m", "d_max_m", "interference_threshold_m", "snr_db",
                   "p_max"} - set(data)
        if missing:
            raise ConfigError(f"missing simulation config keys: {sorted(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass
class NetworkTopology:
    """Planar placement of the N pairs.

    ``cross_distances[i, n]`` is the TX i -> RX n distance in meters; its
    diagonal equals ``pair_distances``.  Receivers may land outside the
    configured rectangle (by at most d_max); this is permitted.
    """

    tx_positions: np.ndarray
    rx_positions: np.ndarray
    pair_distances: np.ndarray
    cross_distances: np.ndarray

    def __post_init__(self) -> None:
        n = self.tx_positions.shape[0]
        if self.tx_positions.shape != (n, 2) or self.rx_positions.shape != (n, 2):
            raise ValueError("positions must be (N, 2) arrays")
        if self.pair_distances.shape != (n,) or self.cross_distances.shape != (n, n):
            raise ValueError("distance arrays inconsistent with N")

    @property
    def n_pairs(self) -> int:
        return self.tx_positions.shape[0]


@dataclass
class ChannelTensor:
    """Complex channel tensor ``h[i, n, k]``: TX i -> RX n, antenna k.

    Diagonal slices ``h[n, n, :]`` are the desired channels of the pairs,
    off-diagonal slices are interference channels.
    """

    h: np.ndarray

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 3 or self.h.shape[0] != self.h.shape[1]:
            raise ValueError("channel tensor must have shape (N, N, N_t)")
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel tensor entries must be finite")

    @property
    def n_pairs(self) -> int:
        return self.h.shape[0]

    @property
    def n_tx_antennas(self) -> int:
        return self.h.shape[2]

    def copy(self) -> "ChannelTensor":
        return ChannelTensor(self.h.copy())


@dataclass
class GraphModel:
    """Directed interference graph over the pairs.

    Row n of ``z`` is [desired channel of pair n (N_t entries), weight, noise
    power]; ``a[i, n, :]`` carries the interference channel on edge (i, n) and
    is all-zero off the edge set (self-edges never exist).
    """

    z: np.ndarray
    a: np.ndarray
    edges: frozenset

    def __post_init__(self) -> None:
        n = self.z.shape[0]
        n_t = self.z.shape[1] - 2
        if n_t < 1 or self.a.shape != (n, n, n_t):
            raise ValueError("graph arrays inconsistent")

    @property
    def n_pairs(self) -> int:
        return self.z.shape[0]

    @property
    def n_tx_antennas(self) -> int:
        return self.z.shape[1] - 2

    @property
    def desired_channels(self) -> np.ndarray:
        return self.z[:, : self.n_tx_antennas]

    @property
    def weights(self) -> np.ndarray:
        return self.z[:, self.n_tx_antennas].real

    @property
    def noise_power(self) -> np.ndarray:
        return self.z[:, self.n_tx_antennas + 1].real


def path_loss_db(d_km, log_base: float = 2.0):
    """Distance-dependent attenuation 148.1 + 37.6*log(d) in dB, d in km.

    The logarithm base defaults to 2 (the printed form of the source model);
    base 10 gives the conventional cellular law.
    """
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss requires a positive distance")
    if log_base == 2:
        out = 148.1 + 37.6 * np.log2(d)
    elif log_base == 10:
        out = 148.1 + 37.6 * np.log10(d)
    else:
        raise ValueError("log_base must be 2 or 10")
    if np.isscalar(d_km):
        return float(out)
    return out


def sample_topology(cfg: SimConfig, rng: np.random.Generator) -> NetworkTopology:
    """Drop TXs uniformly in the rectangle and each RX uniformly on an annulus
    of radius [d_min, d_max] around its TX."""
    n = cfg.n_pairs
    tx = rng.uniform(low=[0.0, 0.0],
                     high=[cfg.area_width_m, cfg.area_height_m],
                     size=(n, 2))
    radius = rng.uniform(cfg.d_min_m, cfg.d_max_m, size=n)
    angle = rng.uniform(0.0, 2.0 * math.pi, size=n)
    rx = tx + radius[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    # cross[i, n] = |TX_i - RX_n|
    cross = np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=2)
    # the diagonal is the sampled radius up to rounding; store it exactly
    cross[np.arange(n), np.arange(n)] = radius
    return NetworkTopology(tx_positions=tx, rx_positions=rx,
                           pair_distances=radius, cross_distances=cross)


def sample_channels(topo: NetworkTopology, cfg: SimConfig,
                    rng: np.random.Generator) -> ChannelTensor:
    """Draw the channel tensor: path loss x antenna gain x shadowing x CN(0, I)
    small-scale fading, one i.i.d. complex Gaussian vector per (TX, RX) link."""
    n = cfg.n_pairs
    if topo.n_pairs != n:
        raise ValueError("topology inconsistent with config")
    n_t = cfg.n_tx_antennas
    loss_db = path_loss_db(topo.cross_distances / 1000.0, cfg.pathloss_log_base)
    psi_lin = 10.0 ** (cfg.antenna_gain_dbi / 10.0)
    if cfg.shadowing_sigma_db > 0:
        rho = 10.0 ** (rng.normal(0.0, cfg.shadowing_sigma_db, size=(n, n)) / 10.0)
    else:
        rho = np.ones((n, n))
    amplitude = 10.0 ** (-loss_db / 20.0) * np.sqrt(psi_lin * rho)
    g = (rng.standard_normal((n, n, n_t)) + 1j * rng.standard_normal((n, n, n_t)))
    g *= math.sqrt(0.5)
    return ChannelTensor(amplitude[:, :, None] * g)


def build_graph(h: ChannelTensor, topo: NetworkTopology, cfg: SimConfig,
                noise: np.ndarray | None = None) -> GraphModel:
    """Assemble vertex features and the masked adjacency tensor.

    Edge (i, n), i != n, exists iff the TX i -> RX n distance is strictly below
    the interference threshold; non-edges carry an all-zero channel.  ``noise``
    overrides the per-pair noise powers; by default they are derived from the
    config and the tensor itself (pass the clean-channel noise when rebuilding
    a graph from a perturbed tensor, so only the controller's input changes).
    """
    n, n_t = cfg.n_pairs, cfg.n_tx_antennas
    if h.h.shape != (n, n, n_t) or topo.n_pairs != n:
        raise ValueError("tensor/topology shapes inconsistent with config")
    off_diag = ~np.eye(n, dtype=bool)
    edge_mask = (topo.cross_distances < cfg.interference_threshold_m) & off_diag
    a = np.where(edge_mask[:, :, None], h.h, 0.0 + 0.0j)
    z = np.zeros((n, n_t + 2), dtype=complex)
    z[:, :n_t] = h.h[np.arange(n), np.arange(n), :]
    z[:, n_t] = cfg.weight_vector()
    z[:, n_t + 1] = cfg.noise_vector(h) if noise is None else np.asarray(noise, dtype=float)
    edges = frozenset(zip(*np.nonzero(edge_mask)))
    edges = frozenset((int(i), int(j)) for i, j in edges)
    return GraphModel(z=z, a=a, edges=edges)


def generate_network(cfg: SimConfig, rng: np.random.Generator | None = None):
    """Convenience wrapper: seeded topology + channels + graph in one call."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    topo = sample_topology(cfg, rng)
    h = sample_channels(topo, cfg, rng)
    return topo, h, build_graph(h, topo, cfg)


def sinr_all(g: GraphModel, q) -> np.ndarray:
    """Per-pair SINR vector for a precoder set (see :func:`sinr`)."""
    quad = q.q
    desired = np.abs(np.einsum("nk,nk->n", np.conj(g.desired_channels), quad)) ** 2
    # cross[i, n] = a[i, n, :]^H q_i ; the diagonal of `a` is zero, so summing
    # over all i adds no self term
    cross = np.einsum("ink,ik->in", np.conj(g.a), quad)
    interference = np.sum(np.abs(cross) ** 2, axis=0)
    return desired / (interference + g.noise_power)


def sinr(g: GraphModel, q, n: int) -> float:
    """Desired signal power over interference-plus-noise at RX n.

    The desired term is |z_n^H q_n|^2; interference sums |a[i,n]^H q_i|^2 over
    the in-edges of vertex n.
    """
    if not 0 <= n < g.n_pairs:
        raise IndexError(f"pair index {n} out of range")
    quad = q.q
    desired = abs(np.vdot(g.desired_channels[n], quad[n])) ** 2
    interference = 0.0
    for i in range(g.n_pairs):
        if i != n:
            interference += abs(np.vdot(g.a[i, n, :], quad[i])) ** 2
    return float(desired / (interference + g.noise_power[n]))


def qoc_per_pair(g: GraphModel, q) -> np.ndarray:
    """Per-pair weighted rates w_n * log2(1 + SINR_n)."""
    return g.weights * np.log2(1.0 + sinr_all(g, q))


def qoc(g: GraphModel, q) -> float:
    """Weighted sum rate over all pairs (the quality-of-communication metric).

    Negating this value gives the per-sample loss a sum-rate learner would
    minimize.
    """
    return float(np.sum(qoc_per_pair(g, q)))
