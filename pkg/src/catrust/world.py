"""Spherical-world testbed: agents, profiles, performance sampling, dynamics."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .ca import CaTrustState, CaVariant, CaParams
from .fire import CertifiedStore, FireParams, RatingDb
from .rng import TWO_PI, SplitMix64

PL_PERFECT = 10.0
PL_WORST = -10.0


class ProviderKind(enum.IntEnum):
    GOOD = 0
    ORDINARY = 1
    INTERMITTENT = 2
    BAD = 3


# (mu range, sigma); intermittent providers draw uniformly from their range instead.
PROFILE_TABLE = {
    ProviderKind.GOOD: ((5.0, 10.0), 1.0),
    ProviderKind.ORDINARY: ((0.0, 5.0), 2.0),
    ProviderKind.INTERMITTENT: ((-5.0, 5.0), 0.0),
    ProviderKind.BAD: ((-10.0, 0.0), 2.0),
}


class ConsumerGroup(enum.IntEnum):
    FIRE = 0
    CA_OLD = 1
    CA_NEW = 2

    @property
    def variant(self) -> CaVariant | None:
        return {ConsumerGroup.CA_OLD: CaVariant.V2, ConsumerGroup.CA_NEW: CaVariant.V3}.get(self)


@dataclass
class Location:
    r: float
    phi: float
    theta: float

    def cartesian(self) -> tuple[float, float, float]:
        rs = self.r * math.sin(self.theta)
        return (
            rs * math.cos(self.phi),
            rs * math.sin(self.phi),
            self.r * math.cos(self.theta),
        )


def random_location(rng: SplitMix64, radius: float = 1.0) -> Location:
    """Uniform by volume inside the ball."""
    u = rng.random()
    v = rng.random()
    w = rng.random()
    return Location(radius * u ** (1.0 / 3.0), TWO_PI * w, math.acos(1.0 - 2.0 * v))


def move_location(loc: Location, dphi: float, dtheta: float) -> None:
    phi = math.fmod(loc.phi + dphi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi -= TWO_PI
    theta = loc.theta + dtheta
    if theta < 0.0:
        theta = -theta
    elif theta > math.pi:
        theta = TWO_PI - theta
    loc.phi = phi
    loc.theta = theta


def distance(a: Location, b: Location) -> float:
    ax, ay, az = a.cartesian()
    bx, by, bz = b.cartesian()
    dx, dy, dz = ax - bx, ay - by, az - bz
    return math.sqrt(dx * dx + dy * dy + dz * dz)


@dataclass
class ProviderProfile:
    kind: ProviderKind
    mu_p: float | None = None
    sigma_p: float | None = None

    @classmethod
    def sample(cls, kind: ProviderKind, rng: SplitMix64) -> "ProviderProfile":
        (lo, hi), sigma = PROFILE_TABLE[kind]
        if kind is ProviderKind.INTERMITTENT:
            return cls(kind)
        return cls(kind, rng.uniform(lo, hi), sigma)


def clamp_ug(x: float) -> float:
    return max(PL_WORST, min(PL_PERFECT, x))


def sample_performance(profile: ProviderProfile, rng: SplitMix64) -> float:
    if profile.kind is ProviderKind.INTERMITTENT:
        return clamp_ug(rng.uniform(-5.0, 5.0))
    return clamp_ug(rng.normal(profile.mu_p, profile.sigma_p))


def degrade(raw: float, dist: float, provider_radius: float, world_radius: float = 1.0) -> float:
    """Linear quality loss outside the provider's radius.

    The slope spreads the whole performance range over the largest possible
    excess distance, ``2 * world_radius - provider_radius``.
    """
    if dist <= provider_radius:
        return raw
    slope = (PL_PERFECT - PL_WORST) / (2.0 * world_radius - provider_radius)
    return clamp_ug(raw - slope * (dist - provider_radius))


@dataclass
class ProviderAgent:
    id: int
    location: Location
    profile: ProviderProfile
    ca_old: CaTrustState = None
    ca_new: CaTrustState = None
    certified: CertifiedStore = None
    operational_radius: float = 0.5

    def __post_init__(self):
        if self.ca_old is None:
            self.ca_old = CaTrustState(self.id)
        if self.ca_new is None:
            self.ca_new = CaTrustState(self.id)
        if self.certified is None:
            self.certified = CertifiedStore()

    def state_for(self, variant: CaVariant) -> CaTrustState:
        return self.ca_new if variant is CaVariant.V3 else self.ca_old


@dataclass
class ConsumerAgent:
    id: int
    location: Location
    activity: float
    group: ConsumerGroup
    interaction_count: int = 0
    rating_db: RatingDb | None = None


@dataclass
class DynamicsConfig:
    p_cpc: float = 0.0
    p_ppc: float = 0.0
    p_clc: float = 0.0
    p_plc: float = 0.0
    delta_phi_max: float = 0.0
    p_mu_c: float = 0.0
    drift_magnitude: float = 0.0
    p_profile_switch: float = 0.0

    def __post_init__(self):
        for name in ("p_cpc", "p_ppc", "p_clc", "p_plc", "p_mu_c", "p_profile_switch"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.drift_magnitude < 0 or self.delta_phi_max < 0:
            raise ValueError("drift_magnitude and delta_phi_max must be >= 0")


@dataclass
class WorldConfig:
    rounds: int = 500
    n_good: int = 10
    n_ordinary: int = 40
    n_intermittent: int = 5
    n_bad: int = 45
    n_consumers: int = 500
    activity_min: float = 0.25
    activity_max: float = 1.0
    # Each escalation level gets one full provider-polling pass; kept for reference only.
    waiting_time_ms: float = 1000.0
    world_radius: float = 1.0
    operational_radius: float = 0.5

    def __post_init__(self):
        counts = (self.rounds, self.n_good, self.n_ordinary, self.n_intermittent,
                  self.n_bad, self.n_consumers)
        if any(int(c) != c or c < 0 for c in counts):
            raise ValueError("rounds and agent counts must be non-negative integers")
        if not 0.0 <= self.activity_min <= self.activity_max <= 1.0:
            raise ValueError("activity range must satisfy 0 <= min <= max <= 1")
        if self.world_radius <= 0 or self.operational_radius <= 0:
            raise ValueError("radii must be positive")

    @property
    def n_providers(self) -> int:
        return self.n_good + self.n_ordinary + self.n_intermittent + self.n_bad

    def provider_kinds(self) -> list[ProviderKind]:
        return (
            [ProviderKind.GOOD] * self.n_good
            + [ProviderKind.ORDINARY] * self.n_ordinary
            + [ProviderKind.INTERMITTENT] * self.n_intermittent
            + [ProviderKind.BAD] * self.n_bad
        )

    def consumer_groups(self) -> list[ConsumerGroup]:
        return [ConsumerGroup(i % 3) for i in range(self.n_consumers)]


class World:
    """One run's agents plus the cached proximity structure.

    Agents live in fixed slots; churn puts a fresh agent (new id) into the
    departed agent's slot.  Graph nodes are slot based: consumer ``i`` is node
    ``i`` and provider ``j`` is node ``n_consumers + j``.
    """

    def __init__(self, config: WorldConfig, dynamics: DynamicsConfig, rng: SplitMix64,
                 ca_params: CaParams | None = None, fire_params: FireParams | None = None):
        self.config = config
        self.dynamics = dynamics
        self.rng = rng
        self.ca_params = ca_params or CaParams()
        self.fire_params = fire_params or FireParams()
        self.providers: list[ProviderAgent] = []
        self.consumers: list[ConsumerAgent] = []
        self.next_provider_id = 0
        self.next_consumer_id = 0
        self.rule_base: tuple = ()
        self._dirty = True
        self._dist2 = None
        self._consumer_providers: list[list[int]] = []
        self._acq: dict[int, list[int]] = {}

    # agent creation ---------------------------------------------------------
    def new_provider(self, kind: ProviderKind) -> ProviderAgent:
        loc = random_location(self.rng, self.config.world_radius)
        profile = ProviderProfile.sample(kind, self.rng)
        agent = ProviderAgent(self.next_provider_id, loc, profile,
                              operational_radius=self.config.operational_radius)
        agent.certified = CertifiedStore(self.fire_params.history_size)
        self.next_provider_id += 1
        self._dirty = True
        return agent

    def new_consumer(self, group: ConsumerGroup) -> ConsumerAgent:
        loc = random_location(self.rng, self.config.world_radius)
        activity = self.rng.uniform(self.config.activity_min, self.config.activity_max)
        db = RatingDb(self.fire_params.history_size) if group is ConsumerGroup.FIRE else None
        agent = ConsumerAgent(self.next_consumer_id, loc, activity, group, rating_db=db)
        self.next_consumer_id += 1
        self._dirty = True
        return agent

    # geometry ---------------------------------------------------------------
    def mark_moved(self) -> None:
        self._dirty = True

    def node_of_consumer(self, slot: int) -> int:
        return slot

    def node_of_provider(self, slot: int) -> int:
        return len(self.consumers) + slot

    def _refresh(self) -> None:
        if not self._dirty:
            return
        pts = [a.location.cartesian() for a in self.consumers] + [
            a.location.cartesian() for a in self.providers
        ]
        xyz = np.array(pts, dtype=np.float64).reshape(-1, 3)
        x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        dz = z[:, None] - z[None, :]
        d2 = dx * dx + dy * dy + dz * dz
        r0 = self.config.operational_radius
        close = d2 <= r0 * r0
        n_c = len(self.consumers)
        np.fill_diagonal(close, False)
        self._dist2 = d2
        self._acq = {i: np.flatnonzero(close[i]).tolist() for i in range(len(pts))}
        self._consumer_providers = [
            (np.flatnonzero(close[i, n_c:])).tolist() for i in range(n_c)
        ]
        self._dirty = False

    @property
    def acquaintances(self) -> dict[int, list[int]]:
        self._refresh()
        return self._acq

    def providers_near(self, consumer_slot: int) -> list[int]:
        self._refresh()
        return self._consumer_providers[consumer_slot]

    def consumer_provider_distance(self, consumer_slot: int, provider_slot: int) -> float:
        self._refresh()
        return math.sqrt(self._dist2[consumer_slot, len(self.consumers) + provider_slot])

    def nearby(self, agent) -> list:
        """Agents (consumers and providers) within the operational radius of ``agent``."""
        self._refresh()
        node = self._node_for(agent)
        n_c = len(self.consumers)
        return [self.consumers[j] if j < n_c else self.providers[j - n_c] for j in self._acq[node]]

    def _node_for(self, agent) -> int:
        if isinstance(agent, ConsumerAgent):
            return next(i for i, c in enumerate(self.consumers) if c is agent)
        return len(self.consumers) + next(i for i, p in enumerate(self.providers) if p is agent)

    def fire_db(self, node: int) -> RatingDb | None:
        if node < len(self.consumers):
            return self.consumers[node].rating_db
        return None


class _DbView:
    """Mapping facade: graph node -> RatingDb (FIRE consumers only)."""

    def __init__(self, world: World):
        self._world = world

    def get(self, node, default=None):
        db = self._world.fire_db(node)
        return default if db is None else db


def init_world(config: WorldConfig, dynamics: DynamicsConfig, seed: int,
               ca_params: CaParams | None = None,
               fire_params: FireParams | None = None) -> World:
    world = World(config, dynamics, SplitMix64(seed), ca_params, fire_params)
    world.providers = [world.new_provider(k) for k in config.provider_kinds()]
    world.consumers = [world.new_consumer(g) for g in config.consumer_groups()]
    return world


def _replace_consumer(world: World, slot: int) -> None:
    world.consumers[slot] = world.new_consumer(world.consumers[slot].group)


def _replace_provider(world: World, slot: int) -> None:
    world.providers[slot] = world.new_provider(world.providers[slot].profile.kind)


def apply_dynamics(world: World, dynamics: DynamicsConfig, rng: SplitMix64) -> dict:
    """End-of-round environment changes, always in the same order.

    μ drift, profile switches, location changes, then churn.  A probability of
    zero skips its step without consuming any random numbers.
    """
    report = {"mu_drift": 0, "profile_switch": 0, "moved": 0,
              "consumers_replaced": 0, "providers_replaced": 0}

    if dynamics.p_mu_c > 0.0:
        m = dynamics.drift_magnitude
        for p in world.providers:
            if p.profile.kind is ProviderKind.INTERMITTENT:
                continue
            if rng.random() < dynamics.p_mu_c:
                p.profile.mu_p = clamp_ug(p.profile.mu_p + rng.uniform(-m, m))
                report["mu_drift"] += 1

    if dynamics.p_profile_switch > 0.0:
        for p in world.providers:
            if rng.random() < dynamics.p_profile_switch:
                others = [k for k in ProviderKind if k is not p.profile.kind]
                p.profile = ProviderProfile.sample(others[rng.randbelow(len(others))], rng)
                report["profile_switch"] += 1

    if dynamics.p_clc > 0.0 or dynamics.p_plc > 0.0:
        d = dynamics.delta_phi_max
        for agents, prob in ((world.consumers, dynamics.p_clc), (world.providers, dynamics.p_plc)):
            if prob <= 0.0:
                continue
            for a in agents:
                if rng.random() < prob:
                    dphi = rng.uniform(-d, d)
                    dtheta = rng.uniform(-d, d)
                    move_location(a.location, dphi, dtheta)
                    report["moved"] += 1
        if report["moved"]:
            world.mark_moved()

    if dynamics.p_cpc > 0.0:
        n_c = len(world.consumers)
        cap = math.floor(dynamics.p_cpc * n_c)
        count = rng.randbelow(cap + 1)
        for slot in rng.sample(list(range(n_c)), count):
            _replace_consumer(world, slot)
        report["consumers_replaced"] = count

    if dynamics.p_ppc > 0.0:
        n_p = len(world.providers)
        cap = math.floor(dynamics.p_ppc * n_p)
        count = rng.randbelow(cap + 1)
        for slot in rng.sample(list(range(n_p)), count):
            _replace_provider(world, slot)
        report["providers_replaced"] = count

    return report
