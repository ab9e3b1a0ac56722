"""Consumer-side FIRE trust and reputation model.

Ratings are utility gains normalized to [-1, 1].  Each component (interaction
trust, role-based trust, witness reputation, certified reputation) yields a
:class:`TrustReport`; :func:`composite_trust` blends whichever are present.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .ca import SERVICE

UG_SCALE = 10.0


def normalize_ug(ug: float) -> float:
    return ug / UG_SCALE


@dataclass(frozen=True)
class RatingRecord:
    rater: Hashable
    ratee: Hashable
    round: int
    value: float
    term: Hashable = SERVICE


@dataclass(frozen=True)
class TrustReport:
    value: float | None
    reliability: float

    @property
    def present(self) -> bool:
        return self.value is not None


ABSENT = TrustReport(None, 0.0)


class Component(enum.Enum):
    IT = "interaction"
    RT = "role"
    WR = "witness"
    CR = "certified"


@dataclass
class FireParams:
    history_size: int = 10
    recency_scale: float = -5.0 / math.log(0.5)
    branching_factor: int = 2
    referral_length: int = 5
    w_i: float = 2.0
    w_r: float = 2.0
    w_w: float = 1.0
    w_c: float = 0.5
    gamma_i: float = -math.log(0.5)
    gamma_r: float = -math.log(0.5)
    gamma_w: float = -math.log(0.5)
    gamma_c: float = -math.log(0.5)
    # Probability of trying an unrated provider when rated ones exist.
    exploration: float = 0.1

    def coefficient(self, component: Component) -> float:
        return {
            Component.IT: self.w_i,
            Component.RT: self.w_r,
            Component.WR: self.w_w,
            Component.CR: self.w_c,
        }[component]


class RatingDb:
    """Bounded rating log keyed by (rater, ratee, term); oldest evicted first."""

    def __init__(self, capacity: int = 10):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._log: dict = {}

    def add(self, record: RatingRecord) -> None:
        if not -1.0 <= record.value <= 1.0:
            raise ValueError(f"rating value {record.value} outside [-1, 1]")
        key = (record.rater, record.ratee, record.term)
        bucket = self._log.get(key)
        if bucket is None:
            bucket = self._log[key] = deque(maxlen=self.capacity)
        bucket.append(record)

    def ratings(self, rater, ratee, term=SERVICE) -> list[RatingRecord]:
        return list(self._log.get((rater, ratee, term), ()))

    def about(self, ratee, term=SERVICE) -> list[RatingRecord]:
        out = []
        for (_, r, t), bucket in self._log.items():
            if r == ratee and t == term:
                out.extend(bucket)
        return out

    def __len__(self) -> int:
        return sum(len(b) for b in self._log.values())


def record_rating(db: RatingDb, record: RatingRecord) -> RatingDb:
    db.add(record)
    return db


class CertifiedStore:
    """References a provider keeps about itself: only its best ratings survive.

    When full, a new rating replaces the lowest-valued one (earliest among
    equals) if it is strictly better; the newcomer goes to the end.
    """

    def __init__(self, capacity: int = 10):
        self.capacity = capacity
        self.records: list[RatingRecord] = []

    def offer(self, record: RatingRecord) -> bool:
        if len(self.records) < self.capacity:
            self.records.append(record)
            return True
        lowest = min(range(len(self.records)), key=lambda i: self.records[i].value)
        if record.value > self.records[lowest].value:
            del self.records[lowest]
            self.records.append(record)
            return True
        return False

    def __len__(self) -> int:
        return len(self.records)


def component_trust(
    records: Sequence[RatingRecord], now: int, gamma: float, recency_scale: float
) -> TrustReport:
    """Recency-weighted mean rating with FIRE's two-part reliability."""
    if not records:
        return ABSENT
    weights = [math.exp(-(now - r.round) / recency_scale) for r in records]
    total_w = 0.0
    total_wv = 0.0
    for w, r in zip(weights, records):
        total_w += w
        total_wv += w * r.value
    if total_w <= 0.0:
        return ABSENT
    value = total_wv / total_w
    dev = 0.0
    for w, r in zip(weights, records):
        dev += w * abs(r.value - value)
    rho_count = 1.0 - math.exp(-gamma * total_w)
    rho_dev = 1.0 - (dev / total_w) / 2.0
    return TrustReport(value, rho_count * rho_dev)


def interaction_trust(db: RatingDb, consumer, provider, params: FireParams, now: int) -> TrustReport:
    return component_trust(
        db.ratings(consumer, provider), now, params.gamma_i, params.recency_scale
    )


def find_witnesses(
    consumer,
    provider,
    acquaintances: Mapping[Hashable, Sequence],
    rating_dbs: Mapping[Hashable, RatingDb],
    params: FireParams,
    rng,
) -> list[tuple[Hashable, list[RatingRecord]]]:
    """Breadth-first referral search for agents that have rated ``provider``.

    The consumer sits at depth 0 and asks ``branching_factor`` random
    acquaintances; a node holding ratings answers with them, any other node
    refers onward the same way.  Nodes deeper than ``referral_length`` are
    never asked.  Returns (witness, ratings) in discovery order.
    """
    visited = {consumer}
    frontier = [consumer]
    found = []
    for _depth in range(params.referral_length):
        asked = []
        for node in frontier:
            fresh = [nb for nb in acquaintances.get(node, ()) if nb not in visited]
            if len(fresh) > params.branching_factor:
                fresh = rng.sample(fresh, params.branching_factor)
            visited.update(fresh)
            asked.extend(fresh)
        frontier = []
        for node in asked:
            db = rating_dbs.get(node)
            ratings = db.about(provider) if db is not None else []
            if ratings:
                found.append((node, ratings))
            else:
                frontier.append(node)
        if not frontier:
            break
    return found


def witness_reputation(
    consumer,
    provider,
    acquaintances: Mapping[Hashable, Sequence],
    rating_dbs: Mapping[Hashable, RatingDb],
    params: FireParams,
    now: int,
    rng,
) -> TrustReport:
    collected = []
    for _, ratings in find_witnesses(consumer, provider, acquaintances, rating_dbs, params, rng):
        collected.extend(ratings)
    return component_trust(collected, now, params.gamma_w, params.recency_scale)


def certified_reputation(provider, store: CertifiedStore, params: FireParams, now: int) -> TrustReport:
    return component_trust(store.records, now, params.gamma_c, params.recency_scale)


@dataclass(frozen=True)
class RoleRule:
    """Domain rule: if ``matches(consumer, provider)`` then expect ``value``."""

    value: float
    reliability: float
    matches: Callable = field(default=lambda consumer, provider: True, compare=False)


def role_based_trust(consumer, provider, rule_base: Iterable[RoleRule] = ()) -> TrustReport:
    """Reliability-weighted mean of matching rules; reliability is their mean."""
    hits = [r for r in rule_base if r.matches(consumer, provider)]
    weight = 0.0
    acc = 0.0
    for r in hits:
        weight += r.reliability
        acc += r.reliability * r.value
    if not hits or weight <= 0.0:
        return ABSENT
    return TrustReport(acc / weight, weight / len(hits))


def composite_trust(reports: Mapping[Component, TrustReport], params: FireParams) -> TrustReport:
    num = 0.0
    den = 0.0
    coef_total = 0.0
    for comp in Component:
        rep = reports.get(comp)
        if rep is None or not rep.present:
            continue
        coef = params.coefficient(comp)
        num += coef * rep.reliability * rep.value
        den += coef * rep.reliability
        coef_total += coef
    if den <= 0.0:
        return ABSENT
    return TrustReport(num / den, den / coef_total)


def select_provider(
    candidates: Sequence,
    evaluate: Callable[[Hashable], TrustReport],
    rng,
    exploration: float = 0.1,
):
    """Pick a provider id from ``candidates``; None when there are none.

    Every candidate is evaluated in the given order.  Unrated candidates are
    explored with probability ``exploration`` (always, if nobody is rated);
    otherwise the highest composite value wins, ties to the lowest id.
    """
    if not candidates:
        return None
    rated = []
    unrated = []
    for cand in candidates:
        report = evaluate(cand)
        if report.present:
            rated.append((cand, report.value))
        else:
            unrated.append(cand)
    if not rated:
        return unrated[rng.randbelow(len(unrated))]
    if unrated and rng.random() < exploration:
        return unrated[rng.randbelow(len(unrated))]
    best, best_value = rated[0]
    for cand, value in rated[1:]:
        if value > best_value or (value == best_value and cand < best):
            best, best_value = cand, value
    return best
