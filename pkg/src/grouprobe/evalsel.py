"""Group-aware evaluation, checkpoint selection, and Pareto extraction."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, ShapeError
from .linmodel import ModelParams, classify
from .synthgen import N_GROUPS, LabeledDataset


class SelectionStrategy(Enum):
    """Which validation statistic picks the checkpoint."""

    VAL_GP = "val_gp"  # maximize worst-group accuracy (needs group info)
    NO_GP = "no_gp"    # maximize example-weighted average accuracy


@dataclass(frozen=True)
class GroupMetrics:
    """Accuracy per group plus the two scalar summaries.

    per_group_acc holds NaN for groups absent from the evaluated set; wg_acc
    is the minimum over the groups actually present and all_groups_present
    records whether that covered all four.
    """

    per_group_acc: np.ndarray
    group_sizes: np.ndarray
    avg_acc: float
    wg_acc: float
    all_groups_present: bool

    def to_json_dict(self) -> dict:
        return {
            "per_group_acc": [None if np.isnan(v) else float(v) for v in self.per_group_acc],
            "group_sizes": [int(v) for v in self.group_sizes],
            "avg_acc": self.avg_acc,
            "wg_acc": self.wg_acc,
            "all_groups_present": self.all_groups_present,
        }


def evaluate(params: ModelParams, data: LabeledDataset) -> GroupMetrics:
    """Hard-label accuracy of the end head, overall and per group."""
    if len(data) == 0:
        raise InvalidInputError("cannot evaluate on an empty dataset")
    correct = (classify(params, data.features) == data.labels).astype(np.float64)
    sizes = np.bincount(data.group_ids, minlength=N_GROUPS)
    per_group = np.full(N_GROUPS, np.nan)
    for g in range(N_GROUPS):
        if sizes[g] > 0:
            per_group[g] = correct[data.group_ids == g].mean()
    present = sizes > 0
    return GroupMetrics(
        per_group_acc=per_group,
        group_sizes=sizes,
        avg_acc=float(correct.mean()),
        wg_acc=float(per_group[present].min()),
        all_groups_present=bool(present.all()),
    )


def select_checkpoint(trace, strategy: SelectionStrategy) -> int:
    """Index of the best epoch in a training trace under the given strategy.

    Ties go to the earliest epoch.  VAL_GP requires every record to carry a
    worst-group validation accuracy.
    """
    records = trace.records
    if not records:
        raise InvalidInputError("empty trace")
    if strategy is SelectionStrategy.VAL_GP:
        series = [r.val_wg_acc for r in records]
        if any(v is None or np.isnan(v) for v in series):
            raise InvalidInputError("VAL_GP selection needs group-resolved validation metrics")
    elif strategy is SelectionStrategy.NO_GP:
        series = [r.val_avg_acc for r in records]
    else:  # pragma: no cover - enum is closed
        raise InvalidInputError(f"unknown strategy {strategy!r}")
    return int(np.argmax(np.asarray(series, dtype=np.float64)))


def spur_core_log_ratio(a: np.ndarray, d_c: int, d_s: int) -> float:
    """log(||a_spur||_1 / ||a_core||_1) for a featurizer split [core | spurious].

    Returns -inf when the spurious block is exactly zero; a zero core block
    makes the ratio undefined and raises instead.
    """
    a = np.asarray(a, dtype=np.float64)
    if d_c < 1 or d_s < 1:
        raise InvalidInputError("d_c and d_s must each be >= 1")
    if a.shape != (d_c + d_s,):
        raise ShapeError(f"expected a of length {d_c + d_s}, got shape {a.shape}")
    core = np.abs(a[:d_c]).sum()
    spur = np.abs(a[d_c:]).sum()
    if core == 0.0:
        raise DegenerateInputError("zero core mass: log ratio is undefined")
    if spur == 0.0:
        return float("-inf")
    return float(np.log(spur / core))


@dataclass(frozen=True)
class ParetoPoint:
    """One configuration's (average, worst-group) accuracy with its settings tag."""

    avg_acc: float
    wg_acc: float
    tag: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("avg_acc", "wg_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must be in [0, 1], got {v}")


def dominates(p: ParetoPoint, q: ParetoPoint) -> bool:
    """True when p is at least as good on both axes and strictly better on one."""
    return (
        p.avg_acc >= q.avg_acc
        and p.wg_acc >= q.wg_acc
        and (p.avg_acc > q.avg_acc or p.wg_acc > q.wg_acc)
    )


def pareto_front(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated subset, sorted by avg_acc descending.

    Exact duplicates do not dominate each other, so all copies of a surviving
    point are kept.  Single sweep over an avg-sorted order, O(n log n).
    """
    if not points:
        return []
    order = sorted(range(len(points)), key=lambda i: -points[i].avg_acc)
    front: list[ParetoPoint] = []
    best_wg = -np.inf
    i = 0
    n = len(order)
    while i < n:
        # bucket of equal avg_acc
        j = i
        avg = points[order[i]].avg_acc
        while j < n and points[order[j]].avg_acc == avg:
            j += 1
        bucket = [points[order[k]] for k in range(i, j)]
        bucket_max = max(p.wg_acc for p in bucket)
        # within the bucket only max-wg points survive; across buckets the wg
        # must strictly exceed everything already kept at higher avg
        if bucket_max > best_wg:
            front.extend(p for p in bucket if p.wg_acc == bucket_max)
            best_wg = bucket_max
        i = j
    return front


PARETO_CSV_COLUMNS = ["avg_acc", "wg_acc", "method", "alpha_aux", "alpha_reg", "tau", "lr", "batch"]


def write_pareto_csv(points: list[ParetoPoint], path: str | Path) -> None:
    """Write points with their settings tag in a fixed column order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PARETO_CSV_COLUMNS)
        for p in points:
            row = [repr(float(p.avg_acc)), repr(float(p.wg_acc))]
            for col in PARETO_CSV_COLUMNS[2:]:
                v = p.tag.get(col, "")
                row.append(repr(float(v)) if isinstance(v, float) else str(v))
            w.writerow(row)


def read_pareto_csv(path: str | Path) -> list[ParetoPoint]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != PARETO_CSV_COLUMNS:
            raise InvalidInputError(f"unrecognized Pareto CSV header: {header!r}")
        out = []
        for row in r:
            tag = dict(zip(PARETO_CSV_COLUMNS[2:], row[2:]))
            out.append(ParetoPoint(float(row[0]), float(row[1]), tag))
    return out


def write_front_gnuplot(points: list[ParetoPoint], path: str | Path) -> None:
    """Two-column `avg wg` file, one point per line, '#'-prefixed header."""
    lines = ["# avg_acc wg_acc"]
    lines += [f"{repr(float(p.avg_acc))} {repr(float(p.wg_acc))}" for p in points]
    Path(path).write_text("\n".join(lines) + "\n")
