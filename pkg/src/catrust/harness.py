"""Experiment manifest, multi-run orchestration, aggregation, ranking and export."""
from __future__ import annotations

import csv
import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import run_simulation
from .ca import CaParams
from .fire import FireParams
from .kernel import LogTable
from .stats import welch_from_moments
from .world import ConsumerGroup, DynamicsConfig, WorldConfig

DEFAULT_NSIR = 30
ALPHA = 0.05
COMPARISONS = (
    (ConsumerGroup.CA_OLD, ConsumerGroup.CA_NEW),
    (ConsumerGroup.FIRE, ConsumerGroup.CA_NEW),
)

_DPHI = math.pi / 20
EXPERIMENTS: dict[str, tuple[str, DynamicsConfig]] = {
    "1": ("mean performance drift (p_mu_c=0.10, M=1.0)",
          DynamicsConfig(p_mu_c=0.10, drift_magnitude=1.0)),
    "2": ("profile switching (p_profile_switch=0.02)", DynamicsConfig(p_profile_switch=0.02)),
    "3": ("static environment", DynamicsConfig()),
    "4": ("provider population change 2%", DynamicsConfig(p_ppc=0.02)),
    "5": ("provider population change 5%", DynamicsConfig(p_ppc=0.05)),
    "6": ("provider population change 10%", DynamicsConfig(p_ppc=0.10)),
    "7": ("provider population change 20%", DynamicsConfig(p_ppc=0.20)),
    "8": ("provider population change 30%", DynamicsConfig(p_ppc=0.30)),
    "9": ("consumer population change 2%", DynamicsConfig(p_cpc=0.02)),
    "10": ("consumer population change 5%", DynamicsConfig(p_cpc=0.05)),
    "11": ("consumer population change 10%", DynamicsConfig(p_cpc=0.10)),
    "12": ("consumer location change (p_clc=0.10, dphi=pi/20)",
           DynamicsConfig(p_clc=0.10, delta_phi_max=_DPHI)),
    "13": ("provider location change (p_plc=0.10, dphi=pi/20)",
           DynamicsConfig(p_plc=0.10, delta_phi_max=_DPHI)),
    "14": ("all dynamic factors combined",
           DynamicsConfig(p_mu_c=0.10, drift_magnitude=1.0, p_profile_switch=0.02,
                          p_ppc=0.02, p_cpc=0.05, p_clc=0.10, p_plc=0.10,
                          delta_phi_max=_DPHI)),
}


@dataclass
class ExperimentSpec:
    id: str
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    nsir: int = DEFAULT_NSIR
    base_seed: int = 0
    ca_params: CaParams = field(default_factory=CaParams)
    fire_params: FireParams = field(default_factory=FireParams)


def experiment(exp_id, nsir: int = DEFAULT_NSIR, base_seed: int = 0, **kw) -> ExperimentSpec:
    """Spec for one of the fourteen manifest experiments (or ``"custom"``: static)."""
    exp_id = str(exp_id)
    if exp_id == "custom":
        dyn = DynamicsConfig()
    elif exp_id in EXPERIMENTS:
        dyn = dataclasses.replace(EXPERIMENTS[exp_id][1])
    else:
        raise KeyError(f"unknown experiment {exp_id!r}; expected 1..14 or custom")
    return ExperimentSpec(exp_id, dyn, nsir=nsir, base_seed=base_seed, **kw)


def _one_run(args) -> LogTable:
    spec, run_index, backend = args
    return run_simulation(spec.world, spec.dynamics, spec.base_seed + run_index,
                          spec.ca_params, spec.fire_params, run_id=run_index, backend=backend)


def run_experiment(spec: ExperimentSpec, parallelism: int = 1, backend: str | None = None) -> LogTable:
    """``nsir`` independent runs seeded ``base_seed + i``, merged in run order."""
    jobs = [(spec, i, backend) for i in range(spec.nsir)]
    if parallelism > 1 and spec.nsir > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            tables = list(pool.map(_one_run, jobs))
    else:
        tables = [_one_run(j) for j in jobs]
    return LogTable.concat(tables)


@dataclass(frozen=True)
class AggregateRow:
    experiment: str
    group: str
    interaction_index: int
    mean_ug: float
    sample_count: int
    std_dev: float


@dataclass(frozen=True)
class RankRow:
    experiment: str
    interaction_index: int
    group_a: str
    group_b: str
    mean_a: float
    mean_b: float
    p_value: float
    rank_a: int
    rank_b: int


def aggregate(logs: LogTable, experiment: str = "custom") -> list[AggregateRow]:
    """Mean/count/sample-std of UG per (group, interaction index), pooled over runs.

    A cell with one sample reports std 0.
    """
    if len(logs) == 0:
        return []
    group = logs.group.astype(np.int64)
    index = logs.interaction_index.astype(np.int64)
    key = group * (int(index.max()) + 1) + index
    cells, inv = np.unique(key, return_inverse=True)
    counts = np.bincount(inv)
    means = np.bincount(inv, weights=logs.ug) / counts
    sq = np.bincount(inv, weights=(logs.ug - means[inv]) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        std = np.where(counts > 1, np.sqrt(sq / np.maximum(counts - 1, 1)), 0.0)
    width = int(index.max()) + 1
    rows = [
        AggregateRow(experiment, ConsumerGroup(int(c // width)).name, int(c % width),
                     float(m), int(n), float(s))
        for c, m, n, s in zip(cells, means, counts, std)
    ]
    rows.sort(key=lambda r: (r.experiment, r.group, r.interaction_index))
    return rows


def rank_pair(a: AggregateRow, b: AggregateRow, alpha: float = ALPHA) -> tuple[float, int, int]:
    """(p, rank_a, rank_b): equal ranks unless the difference is significant."""
    _, _, p = welch_from_moments(a.mean_ug, a.std_dev ** 2, a.sample_count,
                                 b.mean_ug, b.std_dev ** 2, b.sample_count)
    p = float(p)
    if p >= alpha or a.mean_ug == b.mean_ug:
        return p, 1, 1
    return (p, 2, 1) if a.mean_ug > b.mean_ug else (p, 1, 2)


def rank(agg: list[AggregateRow], comparisons=COMPARISONS, alpha: float = ALPHA) -> list[RankRow]:
    """Pairwise t-test ranking per interaction index; indices missing a group are skipped."""
    cells = {(r.group, r.interaction_index): r for r in agg}
    out = []
    for ga, gb in comparisons:
        ga, gb = ConsumerGroup(ga).name, ConsumerGroup(gb).name
        indices = sorted({i for g, i in cells if g == ga} & {i for g, i in cells if g == gb})
        for i in indices:
            a, b = cells[(ga, i)], cells[(gb, i)]
            p, ra, rb = rank_pair(a, b, alpha)
            out.append(RankRow(a.experiment, i, ga, gb, a.mean_ug, b.mean_ug, p, ra, rb))
    out.sort(key=lambda r: (r.experiment, r.group_a, r.group_b, r.interaction_index))
    return out


def index_cap(agg: list[AggregateRow], min_count: int = 30) -> int:
    """Highest interaction index at which every group has at least ``min_count`` samples."""
    groups = {r.group for r in agg}
    per_index: dict[int, set] = {}
    for r in agg:
        if r.sample_count >= min_count:
            per_index.setdefault(r.interaction_index, set()).add(r.group)
    full = [i for i, gs in per_index.items() if gs == groups]
    return max(full) if full else 0


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


AGGREGATE_HEADER = ["experiment", "group", "interaction_index", "mean_ug", "sample_count", "std_dev"]
RANKS_HEADER = ["experiment", "interaction_index", "group_a", "group_b", "mean_a", "mean_b",
                "p_value", "rank_a", "rank_b"]


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def export(agg: list[AggregateRow], ranks: list[RankRow], out_dir, plots: bool = True,
           max_index: int | None = None) -> list[Path]:
    """Write aggregate.csv, ranks.csv and (optionally) one plot-data CSV per comparison."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    if max_index is not None:
        agg = [r for r in agg if r.interaction_index <= max_index]
        ranks = [r for r in ranks if r.interaction_index <= max_index]
    agg = sorted(agg, key=lambda r: (r.experiment, r.group, r.interaction_index))
    ranks = sorted(ranks, key=lambda r: (r.experiment, r.group_a, r.group_b, r.interaction_index))
    written = [out / "aggregate.csv", out / "ranks.csv"]
    _write_csv(written[0], AGGREGATE_HEADER, (dataclasses.astuple(r) for r in agg))
    _write_csv(written[1], RANKS_HEADER, (dataclasses.astuple(r) for r in ranks))
    if plots:
        by_pair: dict[tuple, list[RankRow]] = {}
        for r in ranks:
            by_pair.setdefault((r.group_a, r.group_b), []).append(r)
        for (ga, gb), rows in sorted(by_pair.items()):
            path = out / f"plot_{ga}_vs_{gb}.csv"
            header = ["interaction_index", f"mean_ug_{ga}", f"mean_ug_{gb}",
                      f"rank_{ga}", f"rank_{gb}"]
            _write_csv(path, header, ((r.interaction_index, r.mean_a, r.mean_b,
                                       r.rank_a, r.rank_b) for r in rows))
            written.append(path)
    return written


def write_trace(logs: LogTable, stream) -> None:
    """One line per interaction: run round consumer group provider level ug."""
    for row in logs:
        level = row.level_served.name if row.level_served is not None else "-"
        stream.write(f"{row.run_id} {row.round} {row.consumer_id} {row.group.name} "
                     f"{row.provider_id} {level} {row.ug:.6f}\n")


def series(agg: list[AggregateRow], group) -> dict[int, AggregateRow]:
    name = group.name if isinstance(group, ConsumerGroup) else str(group)
    return {r.interaction_index: r for r in agg if r.group == name}


def default_parallelism() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
