"""Two-tier network model: topology generation, link gains and power budgets.

All positions are in metres, powers in mW unless a name says otherwise.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid network configuration."""


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


@dataclass(frozen=True)
class PathlossModel:
    """Log-distance pathloss ``pl0 + 10 * exponent * log10(d / d0)``, clamped at ``d0``."""

    pl0_db: float
    exponent: float
    d0_m: float = 1.0

    def loss_db(self, distance_m: float) -> float:
        d = max(float(distance_m), self.d0_m)
        return self.pl0_db + 10.0 * self.exponent * math.log10(d / self.d0_m)


@dataclass(frozen=True)
class NetworkConfig:
    n_sbs: int = 10
    sues_per_sbs: int = 4
    n_mues: int = 10
    total_subchannels: int = 20
    subchannels_per_sbs: int = 4
    tdma_slots: int = 4
    subchannel_bandwidth_hz: float = 180e3
    sbs_tx_power_dbm: float = 20.0
    mbs_tx_power_dbm: float = 35.0
    p_lim_dbm: float = 100.0
    noise_dbm: float = -104.0
    mbs_position_km: tuple[float, float] = (1.0, 1.0)
    macro_radius_km: float = 0.75
    sbs_area_radius_km: float = 0.1
    sbs_coverage_m: float = 20.0
    wall_loss_mbs_sue_db: float = 20.0
    wall_loss_sbs_sue_db: float = 0.0
    seed: int = 0
    mbs_pl0_db: float = 34.0
    mbs_pl_exponent: float = 3.5
    mbs_pl_d0_m: float = 1.0
    sbs_pl0_db: float = 37.0
    sbs_pl_exponent: float = 3.0
    sbs_pl_d0_m: float = 1.0
    broadcast_rx_target_dbm: float = -70.0
    broadcast_cap_dbm: float = 60.0
    mbs_all_subchannels: bool = False
    absolute_rate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mbs_position_km", tuple(float(v) for v in self.mbs_position_km))
        if self.n_sbs < 0:
            raise ConfigError("n_sbs must be >= 0")
        for name in ("sues_per_sbs", "n_mues", "total_subchannels", "subchannels_per_sbs", "tdma_slots"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.subchannels_per_sbs > self.total_subchannels:
            raise ConfigError(
                f"subchannels_per_sbs ({self.subchannels_per_sbs}) exceeds "
                f"total_subchannels ({self.total_subchannels})"
            )
        for name in ("macro_radius_km", "sbs_area_radius_km", "sbs_coverage_m", "subchannel_bandwidth_hz"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if len(self.mbs_position_km) != 2:
            raise ConfigError("mbs_position_km must have two coordinates")
        for name in ("mbs_pl_d0_m", "sbs_pl_d0_m"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    @property
    def mbs_pathloss(self) -> PathlossModel:
        return PathlossModel(self.mbs_pl0_db, self.mbs_pl_exponent, self.mbs_pl_d0_m)

    @property
    def sbs_pathloss(self) -> PathlossModel:
        return PathlossModel(self.sbs_pl0_db, self.sbs_pl_exponent, self.sbs_pl_d0_m)

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)

    @property
    def p_lim_mw(self) -> float:
        return dbm_to_mw(self.p_lim_dbm)

    @property
    def rate_scale(self) -> float:
        return self.subchannel_bandwidth_hz if self.absolute_rate else 1.0


@dataclass(frozen=True)
class Topology:
    mbs: np.ndarray                    # (2,)
    sbs: np.ndarray                    # (N, 2)
    sues: np.ndarray                   # (N, L, 2)
    mues: np.ndarray                   # (W, 2)
    initial_subchannels: tuple[tuple[int, ...], ...]
    mue_subchannels: tuple[int, ...]
    total_subchannels: int

    @property
    def n_sbs(self) -> int:
        return len(self.sbs)

    @property
    def sues_per_sbs(self) -> int:
        return self.sues.shape[1] if self.sues.ndim == 3 else 0

    @property
    def subchannels_per_sbs(self) -> int:
        return len(self.initial_subchannels[0]) if self.initial_subchannels else 0

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            np.array_equal(self.mbs, other.mbs)
            and np.array_equal(self.sbs, other.sbs)
            and np.array_equal(self.sues, other.sues)
            and np.array_equal(self.mues, other.mues)
            and self.initial_subchannels == other.initial_subchannels
            and self.mue_subchannels == other.mue_subchannels
            and self.total_subchannels == other.total_subchannels
        )

    __hash__ = None


def _uniform_disc(rng: np.random.Generator, shape, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(shape))
    theta = 2.0 * np.pi * rng.random(shape)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def generate_topology(config: NetworkConfig) -> Topology:
    """Draw a reproducible snapshot of MBS, SBS, SUE and MUE positions and subchannel sets.

    Draw order is fixed so that, for a given seed, changing only a radius rescales
    the same unit-disc samples.
    """
    rng = np.random.default_rng(config.seed)
    n, L, W = config.n_sbs, config.sues_per_sbs, config.n_mues
    T, M = config.total_subchannels, config.subchannels_per_sbs

    mbs = np.array(config.mbs_position_km, dtype=float) * 1000.0
    sbs = mbs + _uniform_disc(rng, (n,), config.sbs_area_radius_km * 1000.0)
    sues = sbs[:, None, :] + _uniform_disc(rng, (n, L), config.sbs_coverage_m)
    mues = mbs + _uniform_disc(rng, (W,), config.macro_radius_km * 1000.0)

    initial = tuple(
        tuple(sorted(int(k) for k in rng.choice(T, size=M, replace=False))) for _ in range(n)
    )
    order = [int(k) for k in rng.permutation(T)]
    # more MUEs than subchannels: extra MUEs reuse subchannels cyclically
    mue_sub = tuple(order[w % T] for w in range(W))
    return Topology(
        mbs=mbs,
        sbs=sbs.reshape(n, 2),
        sues=sues.reshape(n, L, 2),
        mues=mues,
        initial_subchannels=initial,
        mue_subchannels=mue_sub,
        total_subchannels=T,
    )


def link_gain(tx, rx, wall_count: int, pathloss: PathlossModel, wall_loss_db: float) -> float:
    d = math.dist(tx, rx)
    return 10.0 ** (-(pathloss.loss_db(d) + wall_count * wall_loss_db) / 10.0)


def per_subchannel_power(total_dbm: float, active_subchannel_count: int) -> float:
    """Split a total transmit power equally over the active subchannels (mW)."""
    if active_subchannel_count < 1:
        raise ValueError("need at least one active subchannel")
    return dbm_to_mw(total_dbm) / active_subchannel_count


def mbs_subchannels(topology: Topology, config: NetworkConfig) -> tuple[int, ...]:
    if config.mbs_all_subchannels:
        return tuple(range(topology.total_subchannels))
    return tuple(sorted(set(topology.mue_subchannels)))


def broadcast_power(distance_m: float, config: NetworkConfig) -> float:
    """Power (mW) an SBS spends to reach a coalition partner at ``distance_m``."""
    dbm = config.broadcast_rx_target_dbm + config.sbs_pathloss.loss_db(distance_m)
    return dbm_to_mw(min(dbm, config.broadcast_cap_dbm))


@dataclass(frozen=True)
class LinkGainTable:
    sbs_sue: np.ndarray   # (N, N, L): gain from SBS j to SUE u of SBS i, indexed [j, i, u]
    mbs_sue: np.ndarray   # (N, L)

    def gain(self, tx: int | str, rx: tuple[int, int]) -> float:
        i, u = rx
        if tx == "mbs":
            return float(self.mbs_sue[i, u])
        return float(self.sbs_sue[tx, i, u])


def link_gain_table(topology: Topology, config: NetworkConfig) -> LinkGainTable:
    n, L = topology.n_sbs, config.sues_per_sbs
    sbs_pl, mbs_pl = config.sbs_pathloss, config.mbs_pathloss
    sbs_sue = np.empty((n, n, L))
    mbs_sue = np.empty((n, L))
    for i in range(n):
        for u in range(L):
            rx = topology.sues[i, u]
            mbs_sue[i, u] = link_gain(topology.mbs, rx, 1, mbs_pl, config.wall_loss_mbs_sue_db)
            for j in range(n):
                sbs_sue[j, i, u] = link_gain(topology.sbs[j], rx, 1, sbs_pl, config.wall_loss_sbs_sue_db)
    return LinkGainTable(sbs_sue=sbs_sue, mbs_sue=mbs_sue)


@dataclass(frozen=True)
class Network:
    """Everything the game needs: geometry, gains and per-subchannel powers."""

    config: NetworkConfig
    topology: Topology
    gains: LinkGainTable
    sbs_power: np.ndarray        # (N,) per-subchannel transmit power, mW
    mbs_power: np.ndarray        # (T,) MBS power on each subchannel, 0 where silent
    broadcast: np.ndarray = field(repr=False)  # (N, N) broadcast power i -> j, mW

    @property
    def n_sbs(self) -> int:
        return self.topology.n_sbs

    @property
    def units_per_sbs(self) -> int:
        return self.config.subchannels_per_sbs

    @property
    def noise_mw(self) -> float:
        return self.config.noise_mw

    def with_gains(self, sbs_sue=None, mbs_sue=None) -> "Network":
        gains = LinkGainTable(
            sbs_sue=self.gains.sbs_sue if sbs_sue is None else np.asarray(sbs_sue, dtype=float),
            mbs_sue=self.gains.mbs_sue if mbs_sue is None else np.asarray(mbs_sue, dtype=float),
        )
        return dataclasses.replace(self, gains=gains)

    def with_config(self, **changes) -> "Network":
        """Rebuild on the same topology with some config fields changed."""
        return build_network(self.topology, self.config.replace(**changes))


def build_network(topology: Topology, config: NetworkConfig) -> Network:
    n = topology.n_sbs
    if n and topology.subchannels_per_sbs != config.subchannels_per_sbs:
        raise ConfigError("topology subchannel sets do not match subchannels_per_sbs")
    sbs_power = np.full(n, per_subchannel_power(config.sbs_tx_power_dbm, config.subchannels_per_sbs))
    mbs_power = np.zeros(topology.total_subchannels)
    active = mbs_subchannels(topology, config)
    if active:
        mbs_power[list(active)] = per_subchannel_power(config.mbs_tx_power_dbm, len(active))
    bc = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                bc[i, j] = broadcast_power(math.dist(topology.sbs[i], topology.sbs[j]), config)
    return Network(
        config=config,
        topology=topology,
        gains=link_gain_table(topology, config),
        sbs_power=sbs_power,
        mbs_power=mbs_power,
        broadcast=bc,
    )


def make_network(config: NetworkConfig) -> Network:
    return build_network(generate_topology(config), config)
