"""Instance ingestion, synthesis and derivation.

Covers the benchmark-harness side of the repo: JSON (de)serialization of
instances and solutions, a synthetic instance generator shaped after the
industrial benchmark sets, 1-D k-means ABC classification, top-score mandatory
selection, uniform rescoring and stratified subsampling of small exact-solvable
instances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Customer, Instance, Solution, Tour, TravelMatrix, sorted_ids


# ---------------------------------------------------------------------------
# JSON schemas (documented in README): instances and solutions
# ---------------------------------------------------------------------------

def instance_to_dict(instance: Instance, meta: Optional[dict] = None) -> dict:
    doc = {
        "name": instance.name,
        "horizon_days": instance.horizon_days,
        "max_daily_minutes": instance.max_daily_minutes,
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "service_time": c.service_time,
                "score": c.score,
                "abc_class": c.abc_class,
                "mandatory": c.mandatory,
            }
            for c in instance.customers
        ],
        "matrix": instance.matrix.flat(),
    }
    if instance.home_xy is not None:
        doc["home"] = {"x": instance.home_xy[0], "y": instance.home_xy[1]}
    if meta:
        doc["meta"] = meta
    return doc


def instance_from_dict(doc: dict) -> Instance:
    customers = [
        Customer(
            id=c["id"],
            x=c.get("x"),
            y=c.get("y"),
            service_time=float(c.get("service_time", 0.0)),
            score=float(c.get("score", 0.0)),
            abc_class=c.get("abc_class"),
            mandatory=bool(c.get("mandatory", False)),
        )
        for c in doc["customers"]
    ]
    matrix = None
    raw = doc.get("matrix")
    if raw is not None:
        n = len(customers) + 1
        if raw and isinstance(raw[0], (list, tuple)):
            matrix = TravelMatrix(raw)
        else:
            matrix = TravelMatrix.from_flat(raw, n)
    home = doc.get("home")
    home_xy = (home["x"], home["y"]) if home else None
    return Instance(
        customers=customers,
        horizon_days=int(doc["horizon_days"]),
        max_daily_minutes=float(doc["max_daily_minutes"]),
        matrix=matrix,
        name=doc.get("name", ""),
        home_xy=home_xy,
    )


def dump_json(doc: dict, path) -> None:
    """Canonical JSON serialization; identical inputs give identical bytes."""
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_instance(instance: Instance, path, meta: Optional[dict] = None) -> None:
    dump_json(instance_to_dict(instance, meta), path)


def solution_to_dict(sol: Solution, meta: Optional[dict] = None) -> dict:
    doc = {
        "instance": sol.instance_ref,
        "tours": [{"day": t.day, "visits": list(t.visit_order)} for t in sol.tours],
    }
    if meta:
        doc["meta"] = meta
    return doc


def solution_from_dict(doc: dict) -> Solution:
    tours = tuple(Tour(day=int(t["day"]), visit_order=tuple(t["visits"]))
                  for t in doc["tours"])
    return Solution(instance_ref=doc.get("instance", ""), tours=tours)


def load_solution(path) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()))


def save_solution(sol: Solution, path, meta: Optional[dict] = None) -> None:
    dump_json(solution_to_dict(sol, meta), path)


# ---------------------------------------------------------------------------
# ABC classification: 1-D k-means, k-means++ init, best of 10 restarts
# ---------------------------------------------------------------------------

@dataclass
class ABCResult:
    labels: list            # per-customer "A" / "B" / "C"
    centers: list           # cluster means, descending
    sse: float
    degenerate: bool = False


def _kmeans_1d(values: np.ndarray, k: int, restarts: int, max_iter: int,
               rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Lloyd iterations on scalars with k-means++ seeding; returns (centers, sse)."""
    best_centers, best_sse = None, math.inf
    n = len(values)
    for _ in range(restarts):
        # k-means++ seeding
        centers = [values[rng.integers(n)]]
        for _ in range(1, k):
            d2 = np.min([(values - c) ** 2 for c in centers], axis=0)
            total = d2.sum()
            if total <= 0:
                centers.append(values[rng.integers(n)])
                continue
            centers.append(values[np.searchsorted(np.cumsum(d2), rng.random() * total)])
        centers = np.array(centers, dtype=float)
        for _ in range(max_iter):
            assign = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
            new_centers = centers.copy()
            for j in range(k):
                members = values[assign == j]
                if len(members):
                    new_centers[j] = members.mean()
            if np.allclose(new_centers, centers):
                centers = new_centers
                break
            centers = new_centers
        assign = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        sse = float(((values - centers[assign]) ** 2).sum())
        if sse < best_sse - 1e-12:
            best_sse, best_centers = sse, centers
    return best_centers, best_sse


def abc_classify(scores: Sequence[float], k: int = 3, restarts: int = 10,
                 max_iter: int = 300, rng_seed: int = 0) -> ABCResult:
    """Cluster scores into A/B/C by 1-D k-means; highest-mean cluster is A.

    With fewer than 3 distinct scores the labeling degenerates: one distinct
    value labels everything C, two distinct values label the lower cluster C
    and the higher one B. The result carries a ``degenerate`` flag.
    """
    values = np.asarray(list(scores), dtype=float)
    if len(values) < k:
        raise ValueError(f"need at least {k} scores, got {len(values)}")
    distinct = np.unique(values)
    if len(distinct) < k:
        degenerate_classes = ["C"] if len(distinct) == 1 else ["C", "B"]
        order = {v: degenerate_classes[i] for i, v in enumerate(distinct)}
        labels = [order[v] for v in values]
        centers = sorted(distinct.tolist(), reverse=True)
        return ABCResult(labels=labels, centers=centers, sse=0.0, degenerate=True)

    rng = np.random.default_rng(rng_seed)
    centers, sse = _kmeans_1d(values, k, restarts, max_iter, rng)
    rank = np.argsort(-centers)  # descending mean: A, B, C
    cls_of = {int(rank[i]): "ABC"[i] for i in range(k)}
    assign = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
    labels = [cls_of[int(a)] for a in assign]
    return ABCResult(labels=labels, centers=sorted(centers.tolist(), reverse=True), sse=sse)


def classify_instance(instance: Instance, rng_seed: int = 0) -> Instance:
    """Copy of the instance with ABC classes recomputed from its scores."""
    res = abc_classify([c.score for c in instance.customers], rng_seed=rng_seed)
    customers = [
        Customer(id=c.id, x=c.x, y=c.y, service_time=c.service_time, score=c.score,
                 abc_class=res.labels[i], mandatory=c.mandatory)
        for i, c in enumerate(instance.customers)
    ]
    return Instance(customers, instance.horizon_days, instance.max_daily_minutes,
                    matrix=instance.matrix, name=instance.name, home_xy=instance.home_xy)


# ---------------------------------------------------------------------------
# Mandatory selection and score transforms
# ---------------------------------------------------------------------------

def rank_by_score(instance: Instance) -> list:
    """Ids sorted by score descending, ties broken by ascending id."""
    order = sorted_ids([c.id for c in instance.customers])
    pos = {cid: i for i, cid in enumerate(order)}
    return [c.id for c in sorted(instance.customers, key=lambda c: (-c.score, pos[c.id]))]


def select_mandatory(instance: Instance, m: int = 15) -> set:
    """The m highest-score customers; deterministic via ascending-id tie-break."""
    if m > instance.n_customers:
        raise ValueError(f"m={m} exceeds {instance.n_customers} customers")
    return set(rank_by_score(instance)[:m])


def with_mandatory(instance: Instance, mandatory_ids) -> Instance:
    mandatory_ids = set(mandatory_ids)
    customers = [
        Customer(id=c.id, x=c.x, y=c.y, service_time=c.service_time, score=c.score,
                 abc_class=c.abc_class, mandatory=c.id in mandatory_ids)
        for c in instance.customers
    ]
    return Instance(customers, instance.horizon_days, instance.max_daily_minutes,
                    matrix=instance.matrix, name=instance.name, home_xy=instance.home_xy)


def rescore_uniform(instance: Instance, lo: float, hi: float, rng_seed: int = 0,
                    name_suffix: str = "") -> Instance:
    """New instance with i.i.d. uniform scores on [lo, hi]; ABC classes and the
    mandatory set (same size as before) are recomputed from the new scores."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    rng = np.random.default_rng(rng_seed)
    new_scores = rng.uniform(lo, hi, size=instance.n_customers)
    customers = [
        Customer(id=c.id, x=c.x, y=c.y, service_time=c.service_time,
                 score=float(new_scores[i]), abc_class=None, mandatory=False)
        for i, c in enumerate(instance.customers)
    ]
    out = Instance(customers, instance.horizon_days, instance.max_daily_minutes,
                   matrix=instance.matrix, name=instance.name + name_suffix,
                   home_xy=instance.home_xy)
    out = classify_instance(out, rng_seed=rng_seed)
    m = len(instance.mandatory_ids)
    return with_mandatory(out, select_mandatory(out, m)) if m else out


def subsample_small(instance: Instance, n: int, m: int, d: int, rng_seed: int = 0,
                    name_suffix: Optional[str] = None) -> Instance:
    """Stratified subsample of n customers preserving A/B/C proportions.

    Quotas use largest-remainder rounding over the source class shares; the m
    highest-score sampled customers become mandatory regardless of their source
    status; the horizon shrinks to d days. Pairwise travel times and service
    times carry over unchanged.
    """
    if n > instance.n_customers:
        raise ValueError(f"cannot sample {n} of {instance.n_customers} customers")
    if m > n:
        raise ValueError("m must not exceed n")
    rng = np.random.default_rng(rng_seed)

    by_class: dict = {}
    for c in instance.customers:
        by_class.setdefault(c.abc_class, []).append(c.id)
    class_order = sorted(by_class, key=lambda cls: (cls is None, cls))
    total = instance.n_customers

    # largest-remainder quotas per class
    raw = {cls: n * len(by_class[cls]) / total for cls in class_order}
    quota = {cls: int(math.floor(raw[cls])) for cls in class_order}
    leftover = n - sum(quota.values())
    for cls in sorted(class_order, key=lambda cls: (-(raw[cls] - quota[cls]),
                                                    class_order.index(cls))):
        if leftover == 0:
            break
        if quota[cls] < len(by_class[cls]):
            quota[cls] += 1
            leftover -= 1
    # rare: remainder customers exhausted in small classes, fill from any class
    while leftover > 0:
        for cls in class_order:
            if quota[cls] < len(by_class[cls]) and leftover > 0:
                quota[cls] += 1
                leftover -= 1

    chosen = []
    for cls in class_order:
        ids = sorted_ids(by_class[cls])
        take = quota[cls]
        picks = rng.choice(len(ids), size=take, replace=False) if take else []
        chosen.extend(ids[int(i)] for i in sorted(picks))

    chosen_set = set(chosen)
    keep = [c for c in instance.customers if c.id in chosen_set]
    nodes = [0] + [instance.node_of(c.id) for c in keep]
    rows = [[instance.matrix.rows[a][b] for b in nodes] for a in nodes]

    customers = [Customer(id=c.id, x=c.x, y=c.y, service_time=c.service_time,
                          score=c.score, abc_class=c.abc_class, mandatory=False)
                 for c in keep]
    if name_suffix is None:
        name_suffix = f"-n{n}m{m}d{d}"
    out = Instance(customers, horizon_days=d, max_daily_minutes=instance.max_daily_minutes,
                   matrix=TravelMatrix(rows), name=instance.name + name_suffix,
                   home_xy=instance.home_xy)
    return with_mandatory(out, select_mandatory(out, m))


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

@dataclass
class GenConfig:
    """Parameters of a synthetic instance, shaped after the industrial sets."""

    n_customers: int
    horizon_days: int = 5
    service_range: tuple = (15.0, 45.0)     # minutes
    score_mode: tuple = ("uniform", 60.0, 2000.0)
    mandatory_count: int = 15
    max_daily_minutes: float = 480.0
    square_side: float = 240.0              # box width; 1 unit = 1 travel minute
    minutes_per_unit: float = 1.0
    rng_seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        if self.mandatory_count > self.n_customers:
            raise ValueError("mandatory_count must not exceed n_customers")
        lo, hi = self.service_range
        if lo > hi or lo < 0:
            raise ValueError("bad service_range")
        if self.score_mode[0] == "uniform":
            _, s_lo, s_hi = self.score_mode
            if not s_lo <= s_hi:
                raise ValueError("bad score bounds")
        elif self.score_mode[0] == "given":
            raise ValueError("score_mode 'given' only applies when deriving from "
                             "an existing instance; synthesize has no source scores")
        else:
            raise ValueError(f"unknown score_mode {self.score_mode[0]!r}")


def synthesize(config: GenConfig, rng_seed: Optional[int] = None) -> Instance:
    """Generate an instance: customers uniform in a square, home at their
    unweighted center, Euclidean travel times, scores and service times drawn
    per config. Deterministic under a fixed seed."""
    seed = config.rng_seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(seed)
    n = config.n_customers
    xs = rng.uniform(0.0, config.square_side, size=n)
    ys = rng.uniform(0.0, config.square_side, size=n)
    s_lo, s_hi = config.service_range
    services = rng.uniform(s_lo, s_hi, size=n) if n else np.array([])
    _, sc_lo, sc_hi = config.score_mode
    scores = rng.uniform(sc_lo, sc_hi, size=n) if n else np.array([])

    customers = [
        Customer(id=f"c{i + 1:03d}", x=float(xs[i]), y=float(ys[i]),
                 service_time=float(services[i]), score=float(scores[i]))
        for i in range(n)
    ]
    home = (float(xs.mean()), float(ys.mean())) if n else (0.0, 0.0)
    inst = Instance(customers, config.horizon_days, config.max_daily_minutes,
                    name=config.name, home_xy=home,
                    minutes_per_unit=config.minutes_per_unit)
    if n >= 3:
        inst = classify_instance(inst, rng_seed=seed)
    if config.mandatory_count:
        inst = with_mandatory(inst, select_mandatory(inst, config.mandatory_count))
    return inst
