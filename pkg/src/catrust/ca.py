"""Trustee-side CA trust model.

A provider keeps one :class:`Connection` per (consumer, task) it has been
asked to perform.  The weight is the provider's own estimate of how likely it
is to complete that task for that consumer; the provider accepts a request
only when the weight reaches the threshold.

Two variants are implemented:

``V2``
    cold start by averaging same-task weights, plus the upward
    generalization rule (a good result on an easy task reopens harder ones).
``V3``
    V2 plus self-classification: a provider whose last delivered performance
    was <= 0 considers itself bad and pins every OK-or-better connection it
    touches to 0.45, just under the default threshold.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

AgentId = Hashable

SERVICE = "service"
DEFAULT_WEIGHT = 0.5
BAD_PROVIDER_WEIGHT = 0.45


class PerformanceLevel(enum.IntEnum):
    """Requested service quality; the value is the utility constant in UG."""

    WORST = -10
    BAD = -5
    OK = 0
    GOOD = 5
    PERFECT = 10

    @property
    def utility_constant(self) -> int:
        return int(self)

    @property
    def min_successful_performance(self) -> float:
        return float(self)


# Escalation order for consumers: most demanding first.
LEVELS_DESCENDING = (
    PerformanceLevel.PERFECT,
    PerformanceLevel.GOOD,
    PerformanceLevel.OK,
    PerformanceLevel.BAD,
    PerformanceLevel.WORST,
)
NONNEGATIVE_LEVELS = frozenset(
    {PerformanceLevel.PERFECT, PerformanceLevel.GOOD, PerformanceLevel.OK}
)


class CaVariant(str, enum.Enum):
    V2 = "v2"
    V3 = "v3"


@dataclass(frozen=True)
class TaskSpec:
    service_id: Hashable
    level: PerformanceLevel


@dataclass
class Connection:
    provider_id: AgentId
    consumer_id: AgentId
    task: TaskSpec
    weight: float


@dataclass
class CaParams:
    threshold: float = 0.5
    alpha: float = 0.1
    beta: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")


@dataclass(frozen=True)
class RequestMessage:
    consumer_id: AgentId
    task: TaskSpec
    round: int = 0


@dataclass
class CaTrustState:
    """Everything one provider knows about its own capabilities."""

    provider_id: AgentId = None
    connections: dict = field(default_factory=dict)
    pending: list = field(default_factory=list)
    bad_flag: bool = False
    # task -> {consumer_id: Connection}, insertion ordered; mirrors ``connections``.
    _by_task: dict = field(default_factory=dict, repr=False)

    def get(self, consumer_id, task: TaskSpec) -> Connection | None:
        return self.connections.get((consumer_id, task))

    def same_task(self, task: TaskSpec) -> Iterable[Connection]:
        return self._by_task.get(task, {}).values()

    def _store(self, conn: Connection) -> Connection:
        self.connections[(conn.consumer_id, conn.task)] = conn
        self._by_task.setdefault(conn.task, {})[conn.consumer_id] = conn
        return conn


def strengthen(w: float, alpha: float) -> float:
    return min(1.0, w + alpha * (1.0 - w))


def weaken(w: float, beta: float) -> float:
    return max(0.0, w - beta * (1.0 - w))


def min_successful_performance(level: PerformanceLevel) -> float:
    return PerformanceLevel(level).min_successful_performance


def is_success(level: PerformanceLevel, performance: float) -> bool:
    return performance >= min_successful_performance(level)


def _mean_weight(conns) -> float | None:
    total = 0.0
    n = 0
    for conn in conns:
        total += conn.weight
        n += 1
    return total / n if n else None


def init_connection_v2(state: CaTrustState, consumer_id, task: TaskSpec) -> Connection | None:
    """Create the (consumer, task) connection; returns None if it already exists."""
    if (consumer_id, task) in state.connections:
        return None
    avg = _mean_weight(state.same_task(task))
    weight = DEFAULT_WEIGHT if avg is None else avg
    return state._store(Connection(state.provider_id, consumer_id, task, weight))


def _thinks_bad_for(state: CaTrustState, task: TaskSpec) -> bool:
    return state.bad_flag and task.level in NONNEGATIVE_LEVELS


def init_connection_v3(state: CaTrustState, consumer_id, task: TaskSpec) -> Connection | None:
    if (consumer_id, task) in state.connections:
        return None
    if _thinks_bad_for(state, task):
        return state._store(
            Connection(state.provider_id, consumer_id, task, BAD_PROVIDER_WEIGHT)
        )
    return init_connection_v2(state, consumer_id, task)


def refresh_connection_v3(state: CaTrustState, consumer_id, task: TaskSpec) -> Connection:
    conn = state.connections[(consumer_id, task)]
    if _thinks_bad_for(state, task):
        conn.weight = BAD_PROVIDER_WEIGHT
    return conn


def receive(state: CaTrustState, message: RequestMessage, variant: CaVariant) -> Connection:
    """Queue a request and make sure its connection exists (and is refreshed under V3)."""
    state.pending.append(message)
    consumer_id, task = message.consumer_id, message.task
    if variant is CaVariant.V3:
        created = init_connection_v3(state, consumer_id, task)
        if created is not None:
            return created
        return refresh_connection_v3(state, consumer_id, task)
    return init_connection_v2(state, consumer_id, task) or state.connections[
        (consumer_id, task)
    ]


def select_and_decide(
    state: CaTrustState,
    params: CaParams,
    available: Callable[[RequestMessage], bool] = lambda m: True,
) -> list[tuple[RequestMessage, bool]]:
    """Drain the pending list, strongest connection first.

    ``available`` is asked lazily, in processing order, so a caller can mark a
    task done after the first acceptance.  Ties keep arrival order, then the
    lowest consumer id.
    """
    order = sorted(
        enumerate(state.pending),
        key=lambda im: (
            -state.connections[(im[1].consumer_id, im[1].task)].weight,
            im[0],
            im[1].consumer_id,
        ),
    )
    decisions = []
    for _, msg in order:
        w = state.connections[(msg.consumer_id, msg.task)].weight
        accept = w >= params.threshold and available(msg)
        decisions.append((msg, accept))
    state.pending.clear()
    return decisions


def record_outcome(
    state: CaTrustState, consumer_id, task: TaskSpec, success: bool, params: CaParams
) -> float:
    conn = state.connections[(consumer_id, task)]
    if success:
        conn.weight = strengthen(conn.weight, params.alpha)
    else:
        conn.weight = weaken(conn.weight, params.beta)
    return conn.weight


def generalize_upward(
    state: CaTrustState,
    consumer_id,
    executed_task: TaskSpec,
    performance: float,
    params: CaParams,
) -> list[Connection]:
    """Reopen stricter tasks for this consumer that the delivered performance would satisfy."""
    updated = []
    for level in PerformanceLevel:
        if level <= executed_task.level:
            continue
        conn = state.connections.get(
            (consumer_id, TaskSpec(executed_task.service_id, level))
        )
        if conn is None or conn.weight >= params.threshold:
            continue
        if performance >= level.min_successful_performance:
            conn.weight = params.threshold
            updated.append(conn)
    return updated


def update_bad_flag(state: CaTrustState, performance: float) -> bool:
    state.bad_flag = performance <= 0
    return state.bad_flag


def provide(
    state: CaTrustState,
    consumer_id,
    task: TaskSpec,
    performance: float,
    params: CaParams,
    variant: CaVariant,
) -> bool:
    """Feedback after performing ``task``: weight update, self-assessment, generalization."""
    success = is_success(task.level, performance)
    record_outcome(state, consumer_id, task, success, params)
    if variant is CaVariant.V3:
        update_bad_flag(state, performance)
    generalize_upward(state, consumer_id, task, performance, params)
    return success
