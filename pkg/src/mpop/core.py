"""Core domain types for multi-period orienteering: instances, tours, solutions,
feasibility checking and evaluation primitives.

An instance holds a set of customers, a travel-time matrix over customers plus
one home node (matrix index 0), a planning horizon in days and a daily working
time limit. A solution assigns at most one tour per day; every tour implicitly
starts and ends at home. Durations count travel plus service time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

ABC_CLASSES = ("A", "B", "C")

#: absolute tolerance (minutes) for duration feasibility comparisons
DURATION_TOL = 1e-6


class UnknownCustomerError(KeyError):
    """A tour, weight vector or id set references a customer the instance does not have."""


class SizeLimitError(ValueError):
    """An exact routine was asked to handle more customers than its hard limit."""


@dataclass(frozen=True)
class Customer:
    """One customer node.

    ``x``/``y`` are planar coordinates in arbitrary length units and may be None
    when the instance carries an explicit travel matrix. ``score`` is the
    predicted value of a visit; ``abc_class`` is "A", "B", "C" or None for
    unclassified; ``mandatory`` marks membership in the instance-level
    mandatory set.
    """

    id: object
    x: Optional[float] = None
    y: Optional[float] = None
    service_time: float = 0.0
    score: float = 0.0
    abc_class: Optional[str] = None
    mandatory: bool = False

    def __post_init__(self):
        if self.service_time < 0:
            raise ValueError(f"customer {self.id!r}: service_time must be >= 0")
        if self.abc_class not in (None, "A", "B", "C"):
            raise ValueError(f"customer {self.id!r}: bad abc_class {self.abc_class!r}")


class TravelMatrix:
    """Dense travel-time matrix in minutes over home (index 0) plus customers.

    Must be square with a zero diagonal and non-negative entries. Symmetry is
    not required; road travel times may differ by direction.
    """

    __slots__ = ("n_nodes", "rows")

    def __init__(self, times: Sequence[Sequence[float]]):
        n = len(times)
        rows = []
        for i, row in enumerate(times):
            row = [float(v) for v in row]
            if len(row) != n:
                raise ValueError(f"travel matrix row {i} has length {len(row)}, expected {n}")
            if row[i] != 0.0:
                raise ValueError(f"travel matrix diagonal entry ({i},{i}) must be 0")
            for j, v in enumerate(row):
                if v < 0 or math.isnan(v):
                    raise ValueError(f"travel matrix entry ({i},{j}) must be >= 0")
            rows.append(row)
        self.n_nodes = n
        self.rows = rows

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def flat(self) -> list[float]:
        """Row-major flat copy, as stored in instance JSON."""
        return [v for row in self.rows for v in row]

    @classmethod
    def from_flat(cls, values: Sequence[float], n_nodes: int) -> "TravelMatrix":
        if len(values) != n_nodes * n_nodes:
            raise ValueError(f"expected {n_nodes * n_nodes} matrix entries, got {len(values)}")
        return cls([list(values[i * n_nodes:(i + 1) * n_nodes]) for i in range(n_nodes)])

    @classmethod
    def from_coordinates(cls, points: Sequence[tuple[float, float]],
                         minutes_per_unit: float = 1.0) -> "TravelMatrix":
        """Euclidean travel times; ``points[0]`` is the home location."""
        n = len(points)
        rows = [[0.0] * n for _ in range(n)]
        for i in range(n):
            xi, yi = points[i]
            for j in range(i + 1, n):
                xj, yj = points[j]
                t = math.hypot(xi - xj, yi - yj) * minutes_per_unit
                rows[i][j] = t
                rows[j][i] = t
        return cls(rows)


class Instance:
    """An immutable multi-period orienteering instance.

    Customer k of ``customers`` corresponds to matrix node k + 1; node 0 is the
    sales representative's home. If ``matrix`` is None it is synthesized from
    customer coordinates (Euclidean distance scaled by ``minutes_per_unit``).
    """

    def __init__(self, customers: Sequence[Customer], horizon_days: int,
                 max_daily_minutes: float, matrix: Optional[TravelMatrix] = None,
                 name: str = "", home_xy: Optional[tuple[float, float]] = None,
                 minutes_per_unit: float = 1.0):
        if horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if max_daily_minutes <= 0:
            raise ValueError("max_daily_minutes must be > 0")
        self.customers = tuple(customers)
        self.horizon_days = int(horizon_days)
        self.max_daily_minutes = float(max_daily_minutes)
        self.name = name
        self.home_xy = home_xy

        self._index = {}
        for k, c in enumerate(self.customers):
            if c.id in self._index:
                raise ValueError(f"duplicate customer id {c.id!r}")
            self._index[c.id] = k + 1

        if matrix is None:
            if any(c.x is None or c.y is None for c in self.customers):
                raise ValueError("cannot synthesize travel matrix: customers lack coordinates")
            if home_xy is None:
                raise ValueError("cannot synthesize travel matrix: home_xy missing")
            pts = [home_xy] + [(c.x, c.y) for c in self.customers]
            matrix = TravelMatrix.from_coordinates(pts, minutes_per_unit)
        if matrix.n_nodes != len(self.customers) + 1:
            raise ValueError(
                f"matrix has {matrix.n_nodes} nodes, expected {len(self.customers) + 1}")
        self.matrix = matrix

    # -- lookups -------------------------------------------------------------

    def node_of(self, customer_id) -> int:
        """Matrix node index of a customer id (1-based; 0 is home)."""
        try:
            return self._index[customer_id]
        except KeyError:
            raise UnknownCustomerError(customer_id) from None

    def customer(self, customer_id) -> Customer:
        return self.customers[self.node_of(customer_id) - 1]

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    @property
    def mandatory_ids(self) -> set:
        return {c.id for c in self.customers if c.mandatory}

    @property
    def has_coordinates(self) -> bool:
        return all(c.x is not None and c.y is not None for c in self.customers)

    def scores(self) -> dict:
        """Raw predicted scores keyed by customer id."""
        return {c.id: c.score for c in self.customers}

    def travel(self, id_a, id_b) -> float:
        """Travel minutes between two customers (or home when id is None)."""
        a = 0 if id_a is None else self.node_of(id_a)
        b = 0 if id_b is None else self.node_of(id_b)
        return self.matrix.rows[a][b]


@dataclass(frozen=True)
class Tour:
    """Ordered customer visits on one day; home is implicit at both ends."""

    day: int
    visit_order: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "visit_order", tuple(self.visit_order))
        if len(set(self.visit_order)) != len(self.visit_order):
            raise ValueError(f"tour for day {self.day} repeats a customer")


@dataclass(frozen=True)
class Solution:
    """One tour per day of the horizon. Pure data; derived quantities are computed
    against an instance by the functions below."""

    instance_ref: str
    tours: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tours", tuple(self.tours))

    @classmethod
    def from_visit_lists(cls, instance: Instance, day_visits: Sequence[Sequence]) -> "Solution":
        """Build from one id list per day, padding missing days with empty tours."""
        if len(day_visits) > instance.horizon_days:
            raise ValueError("more day lists than horizon days")
        tours = [Tour(day=d, visit_order=tuple(day_visits[d]) if d < len(day_visits) else ())
                 for d in range(instance.horizon_days)]
        return cls(instance_ref=instance.name, tours=tuple(tours))

    @property
    def visited(self) -> set:
        return {cid for t in self.tours for cid in t.visit_order}


@dataclass(frozen=True)
class Violation:
    kind: str          # duplicate_visit | mandatory_unvisited | day_overtime | unknown_customer
    subject: object    # customer id, or day index for day_overtime
    detail: str = ""


@dataclass
class FeasibilityReport:
    ok: bool
    violations: list = field(default_factory=list)

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


def duration(tour: Tour, instance: Instance) -> float:
    """Duration of the closed walk home -> visits -> home, travel plus service.

    Empty tours cost 0. Raises UnknownCustomerError for ids outside the instance.
    """
    if not tour.visit_order:
        return 0.0
    rows = instance.matrix.rows
    total = 0.0
    prev = 0
    for cid in tour.visit_order:
        node = instance.node_of(cid)
        total += rows[prev][node] + instance.customers[node - 1].service_time
        prev = node
    total += rows[prev][0]
    return total


def tour_travel(tour: Tour, instance: Instance) -> float:
    """Travel minutes only (duration minus service)."""
    if not tour.visit_order:
        return 0.0
    service = sum(instance.customer(cid).service_time for cid in tour.visit_order)
    return duration(tour, instance) - service


def check_feasible(sol: Solution, instance: Instance) -> FeasibilityReport:
    """Report every violated constraint class of a solution.

    Violation kinds, each listed once per offending subject and ordered by
    (kind, subject position) for reproducibility:

    - ``unknown_customer``: a visited id the instance does not contain,
    - ``duplicate_visit``: a customer appearing more than once across all tours,
    - ``mandatory_unvisited``: an instance-mandatory customer never visited,
    - ``day_overtime``: a day whose duration exceeds the working-time limit
      beyond DURATION_TOL.
    """
    violations = []
    seen_count: dict = {}
    unknown = []
    for t in sol.tours:
        for cid in t.visit_order:
            if cid in instance._index:
                seen_count[cid] = seen_count.get(cid, 0) + 1
            elif cid not in unknown:
                unknown.append(cid)
    for cid in unknown:
        violations.append(Violation("unknown_customer", cid, "id not in instance"))
    for cid, cnt in seen_count.items():
        if cnt > 1:
            violations.append(Violation("duplicate_visit", cid, f"visited {cnt} times"))
    for c in instance.customers:
        if c.mandatory and seen_count.get(c.id, 0) == 0:
            violations.append(Violation("mandatory_unvisited", c.id, "mandatory customer missing"))
    limit = instance.max_daily_minutes + DURATION_TOL
    for t in sol.tours:
        if any(cid not in instance._index for cid in t.visit_order):
            continue  # duration undefined; already reported as unknown_customer
        d = duration(t, instance)
        if d > limit:
            violations.append(Violation(
                "day_overtime", t.day, f"duration {d:.3f} > limit {instance.max_daily_minutes:.3f}"))
    return FeasibilityReport(ok=not violations, violations=violations)


def objective_value(sol: Solution, weights: Mapping) -> float:
    """Sum of objective weights over visited customers.

    The caller supplies the effective per-customer weights (a ScoreModel's
    vector); mandatory customers contribute whatever the vector says, which is
    0 for all built-in model variants. Missing entries raise
    UnknownCustomerError.
    """
    total = 0.0
    for cid in sorted_ids(sol.visited):
        try:
            total += weights[cid]
        except KeyError:
            raise UnknownCustomerError(cid) from None
    return total


def total_travel(sol: Solution, instance: Instance) -> float:
    return sum(tour_travel(t, instance) for t in sol.tours)


def metrics(sol: Solution, instance: Instance, true_scores: Optional[Mapping] = None) -> dict:
    """Evaluation measures of a feasible solution.

    share_visited = visited / all customers; share_realized = realized true
    score / aggregate true score, counting mandatory customers in both sums;
    total_travel = travel minutes only. share_realized is None when the
    aggregate score is zero.
    """
    if true_scores is None:
        true_scores = instance.scores()
    n = instance.n_customers
    visited = sol.visited
    realized = sum(true_scores[c.id] for c in instance.customers if c.id in visited)
    aggregate = sum(true_scores[c.id] for c in instance.customers)
    share_realized = realized / aggregate if aggregate != 0 else None
    return {
        "share_visited": len(visited) / n if n else 0.0,
        "share_realized": share_realized,
        "total_travel": total_travel(sol, instance),
    }


def sorted_ids(ids: Iterable) -> list:
    """Deterministic ordering for possibly mixed-type ids (type name, then value)."""
    return sorted(ids, key=lambda v: (type(v).__name__, v))
