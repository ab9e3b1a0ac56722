"""Round protocol, pure-Python reference implementation.

Everything here is written against the public ca/fire/world operations.  The
compiled core in ``_core.pyx`` replays the same protocol, consuming random
draws in exactly the same order, so both backends emit identical logs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import ca, fire
from .ca import LEVELS_DESCENDING, SERVICE, PerformanceLevel, RequestMessage, TaskSpec
from .fire import Component, RatingRecord, TrustReport
from .rng import SplitMix64
from .world import (
    ConsumerAgent,
    ConsumerGroup,
    DynamicsConfig,
    World,
    WorldConfig,
    _DbView,
    apply_dynamics,
    degrade,
    init_world,
    sample_performance,
)

NO_LEVEL = 99


@dataclass(frozen=True)
class InteractionLog:
    run_id: int
    round: int
    consumer_id: int
    group: ConsumerGroup
    interaction_index: int
    ug: float
    provider_id: int
    level_served: PerformanceLevel | None = None


_COLUMNS = (
    ("run_id", np.int32),
    ("round", np.int32),
    ("consumer_id", np.int64),
    ("group", np.int8),
    ("interaction_index", np.int32),
    ("ug", np.float64),
    ("provider_id", np.int64),
    ("level", np.int16),
)


class LogTable:
    """Columnar interaction log; iterates as :class:`InteractionLog` rows."""

    def __init__(self, **columns):
        n = None
        for name, dtype in _COLUMNS:
            col = np.asarray(columns.get(name, ()), dtype=dtype)
            if n is None:
                n = len(col)
            elif len(col) != n:
                raise ValueError(f"column {name} has length {len(col)}, expected {n}")
            setattr(self, name, col)

    @classmethod
    def from_rows(cls, rows) -> "LogTable":
        rows = list(rows)
        return cls(
            run_id=[r.run_id for r in rows],
            round=[r.round for r in rows],
            consumer_id=[r.consumer_id for r in rows],
            group=[int(r.group) for r in rows],
            interaction_index=[r.interaction_index for r in rows],
            ug=[r.ug for r in rows],
            provider_id=[r.provider_id for r in rows],
            level=[NO_LEVEL if r.level_served is None else int(r.level_served) for r in rows],
        )

    @classmethod
    def concat(cls, tables) -> "LogTable":
        tables = list(tables)
        if not tables:
            return cls()
        return cls(**{name: np.concatenate([getattr(t, name) for t in tables])
                      for name, _ in _COLUMNS})

    def columns(self) -> dict:
        return {name: getattr(self, name) for name, _ in _COLUMNS}

    def __len__(self) -> int:
        return len(self.ug)

    def __iter__(self) -> Iterator[InteractionLog]:
        for i in range(len(self)):
            lvl = int(self.level[i])
            yield InteractionLog(
                int(self.run_id[i]), int(self.round[i]), int(self.consumer_id[i]),
                ConsumerGroup(int(self.group[i])), int(self.interaction_index[i]),
                float(self.ug[i]), int(self.provider_id[i]),
                None if lvl == NO_LEVEL else PerformanceLevel(lvl),
            )

    def equals(self, other: "LogTable") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n, _ in _COLUMNS)


def _make_evaluator(world: World, slot: int, consumer: ConsumerAgent, round_: int, rng,
                    providers: dict):
    params = world.fire_params
    acq = world.acquaintances
    dbs = _DbView(world)
    node = world.node_of_consumer(slot)

    def evaluate(provider_id) -> TrustReport:
        provider = providers[provider_id]
        reports = {
            Component.IT: fire.interaction_trust(consumer.rating_db, consumer.id,
                                                 provider.id, params, round_),
            Component.RT: fire.role_based_trust(consumer.id, provider.id, world.rule_base),
            Component.WR: fire.witness_reputation(node, provider.id, acq, dbs, params,
                                                  round_, rng),
            Component.CR: fire.certified_reputation(provider.id, provider.certified,
                                                    params, round_),
        }
        return fire.composite_trust(reports, params)

    return evaluate


def fire_interaction(world: World, slot: int, round_: int, rng: SplitMix64,
                     run_id: int = 0) -> InteractionLog | None:
    """One FIRE consumer picks a nearby provider, is served, and rates it."""
    consumer = world.consumers[slot]
    near = world.providers_near(slot)
    if not near:
        return None
    # Candidates are listed (and so evaluated) in slot order.
    slot_of = {world.providers[s].id: s for s in near}
    providers = {pid: world.providers[s] for pid, s in slot_of.items()}
    chosen_id = fire.select_provider(
        list(slot_of),
        _make_evaluator(world, slot, consumer, round_, rng, providers),
        rng,
        world.fire_params.exploration,
    )
    pslot = slot_of[chosen_id]
    provider = world.providers[pslot]
    raw = sample_performance(provider.profile, rng)
    ug = degrade(raw, world.consumer_provider_distance(slot, pslot),
                 world.config.operational_radius, world.config.world_radius)
    rating = RatingRecord(consumer.id, provider.id, round_, fire.normalize_ug(ug))
    consumer.rating_db.add(rating)
    provider.certified.offer(rating)
    consumer.interaction_count += 1
    return InteractionLog(run_id, round_, consumer.id, consumer.group,
                          consumer.interaction_count, ug, provider.id)


def ca_escalation(world: World, slot: int, round_: int, rng: SplitMix64,
                  run_id: int = 0) -> InteractionLog | None:
    """Broadcast from PERFECT downwards until some nearby provider accepts."""
    consumer = world.consumers[slot]
    variant = consumer.group.variant
    near = world.providers_near(slot)
    if not near:
        return None
    params = world.ca_params
    for level in LEVELS_DESCENDING:
        task = TaskSpec(SERVICE, level)
        message = RequestMessage(consumer.id, task, round_)
        order = list(near)
        rng.shuffle(order)
        served = None
        for pslot in order:
            provider = world.providers[pslot]
            state = provider.state_for(variant)
            ca.receive(state, message, variant)
            for _, accept in ca.select_and_decide(state, params, lambda m: served is None):
                if not accept:
                    continue
                raw = sample_performance(provider.profile, rng)
                ug = degrade(raw, world.consumer_provider_distance(slot, pslot),
                             world.config.operational_radius, world.config.world_radius)
                ca.provide(state, consumer.id, task, ug, params, variant)
                served = (provider, ug)
        if served is not None:
            provider, ug = served
            consumer.interaction_count += 1
            return InteractionLog(run_id, round_, consumer.id, consumer.group,
                                  consumer.interaction_count, ug, provider.id, level)
    return None


def run_round(world: World, round_: int, rng: SplitMix64 | None = None,
              run_id: int = 0) -> list[InteractionLog]:
    rng = rng or world.rng
    active = [rng.random() < c.activity for c in world.consumers]
    logs = []
    for slot, consumer in enumerate(world.consumers):
        if active[slot] and consumer.group is ConsumerGroup.FIRE:
            row = fire_interaction(world, slot, round_, rng, run_id)
            if row is not None:
                logs.append(row)
    for slot, consumer in enumerate(world.consumers):
        if active[slot] and consumer.group is not ConsumerGroup.FIRE:
            row = ca_escalation(world, slot, round_, rng, run_id)
            if row is not None:
                logs.append(row)
    apply_dynamics(world, world.dynamics, rng)
    return logs


def run_world(world: World, rounds: int, run_id: int = 0) -> LogTable:
    rows = []
    for t in range(1, rounds + 1):
        rows.extend(run_round(world, t, world.rng, run_id))
    return LogTable.from_rows(rows)


def simulate_python(world_config: WorldConfig, dynamics: DynamicsConfig, seed: int,
                    ca_params: ca.CaParams | None = None,
                    fire_params: fire.FireParams | None = None, run_id: int = 0) -> LogTable:
    world = init_world(world_config, dynamics, seed, ca_params, fire_params)
    return run_world(world, world_config.rounds, run_id)
