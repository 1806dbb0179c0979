"""Aggregation of run results into the comparison measures and CSV/JSON reports.

RNS relates a model's share of visited customers to the NS model on the same
instance; RWS relates its share of realized score to the WS model. Both are
computed on the selected (best-of-runs or exact) row per instance and model.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

COLUMNS = ("instance", "model", "run_id", "share_visited", "share_realized",
           "rns", "rws", "total_travel", "wall_ms", "objective", "status", "flag")

#: run_id values that mark a selected row eligible for RNS/RWS
SELECTED_RUN_IDS = ("best", "oracle")


@dataclass
class ReportRow:
    instance: str
    model: str
    run_id: str
    share_visited: Optional[float] = None
    share_realized: Optional[float] = None
    rns: Optional[float] = None
    rws: Optional[float] = None
    total_travel: Optional[float] = None
    wall_ms: Optional[float] = None
    objective: Optional[float] = None
    status: str = "ok"
    flag: str = ""

    def as_list(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


def compute_rns_rws(rows: Sequence[ReportRow]) -> list:
    """Fill rns/rws on selected rows, per instance, relative to the NS and WS
    rows of the same selection kind. Rows lacking a reference are flagged and
    kept."""
    by_group: dict = {}
    for row in rows:
        if row.run_id in SELECTED_RUN_IDS:
            by_group.setdefault((row.instance, row.run_id), []).append(row)
    for group in by_group.values():
        ns = next((r for r in group if r.model == "NS" and r.status == "ok"), None)
        ws = next((r for r in group if r.model == "WS" and r.status == "ok"), None)
        for row in group:
            if row.status != "ok":
                continue
            if ns is None or not ns.share_visited:
                row.flag = _add_flag(row.flag, "missing_ns_reference")
            elif row.share_visited is not None:
                row.rns = row.share_visited / ns.share_visited
            if ws is None or not ws.share_realized:
                row.flag = _add_flag(row.flag, "missing_ws_reference")
            elif row.share_realized is not None:
                row.rws = row.share_realized / ws.share_realized
    return list(rows)


def _add_flag(flag: str, new: str) -> str:
    return new if not flag else f"{flag};{new}"


def filter_instances(rows: Sequence[ReportRow]) -> list:
    """Drop whole instance groups that would dilute model comparisons: groups
    where some model serves every customer, and groups where a mandatory-set
    variant (MNS or MWS) is infeasible."""
    by_instance: dict = {}
    for row in rows:
        by_instance.setdefault(row.instance, []).append(row)
    kept = []
    for instance, group in by_instance.items():
        all_served = any(r.share_visited is not None and r.share_visited >= 1.0 - 1e-12
                         for r in group)
        mandatory_infeasible = any(r.model in ("MNS", "MWS") and r.status == "infeasible"
                                   for r in group)
        if not all_served and not mandatory_infeasible:
            kept.extend(group)
    return kept


def aggregate(rows: Sequence[ReportRow], group_by: Sequence[str] = ("model",),
              values: Sequence[str] = ("share_visited", "share_realized", "rns", "rws")) -> list:
    """Per-group mean and 95 % normal-approximation confidence half-width.

    None entries are skipped per value; a group contributes one output record
    per value that has data. Raises on empty input.
    """
    if not rows:
        raise ValueError("aggregate needs at least one row")
    groups: dict = {}
    for row in rows:
        key = tuple(getattr(row, g) for g in group_by)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        for value in values:
            data = [getattr(r, value) for r in groups[key] if getattr(r, value) is not None]
            if not data:
                continue
            n = len(data)
            mean = sum(data) / n
            if n > 1:
                var = sum((x - mean) ** 2 for x in data) / (n - 1)
                ci95 = 1.96 * math.sqrt(var / n)
            else:
                ci95 = 0.0
            record = dict(zip(group_by, key))
            record.update({"value": value, "n": n, "mean": mean, "ci95": ci95})
            out.append(record)
    return out


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def write_rows_csv(rows: Sequence[ReportRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_cell(v) for v in row.as_list()])


def write_summary(records: Sequence[dict], csv_path, json_path) -> None:
    if records:
        keys = list(records[0].keys())
    else:
        keys = ["value", "n", "mean", "ci95"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for rec in records:
            writer.writerow([_cell(rec.get(k)) for k in keys])
    Path(json_path).write_text(json.dumps(records, sort_keys=True, indent=2) + "\n")
