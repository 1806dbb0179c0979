"""Exact solver for small instances.

Days are interchangeable (no time windows), so an optimal plan is determined
by the set of visited customers plus a partition of that set into per-day
tours. The solver therefore:

1. runs one full-table Held-Karp pass giving the minimum travel of a closed
   home tour for every customer subset,
2. marks subsets day-feasible when min travel + service fits the daily limit,
3. runs a subset-partition DP for the minimum total travel using at most
   ``horizon_days`` feasible day-sets,
4. per score model, scans every visit-set containing the mandatory customers
   and keeps the best (objective, then lower travel) feasible one.

Pure enumeration over day assignments would visit the same day-sets
factorially often; the subset formulation is equivalent and desk-scale up to
the default limit of 12 customers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import DURATION_TOL, Instance, SizeLimitError, Solution, Tour
from .scoring import ScoreModel, relax_mandatory, weight_vector

INF = math.inf

HELD_KARP_LIMIT = 15


def _held_karp_tables(out_home, dist, n, prune_mask=None):
    """Min-travel open paths home -> ... -> last over all subsets.

    Returns (cost, parent): cost[mask][last] is the cheapest travel of a path
    from home through exactly the customers in ``mask`` ending at ``last``;
    parent[mask][last] reconstructs it. Masks flagged in ``prune_mask`` are
    dead ends (their supersets can never be day-feasible) and are not expanded.
    """
    size = 1 << n
    cost = [None] * size
    parent = [None] * size
    for j in range(n):
        m = 1 << j
        row = [INF] * n
        row[j] = out_home[j]
        cost[m] = row
        par = [-1] * n
        parent[m] = par
    for mask in range(1, size):
        row = cost[mask]
        if row is None:
            continue
        if prune_mask is not None and prune_mask[mask]:
            continue
        rest = (size - 1) & ~mask
        if not rest:
            continue
        par_row = parent[mask]
        for last in range(n):
            c = row[last]
            if c == INF:
                continue
            d_last = dist[last]
            r = rest
            while r:
                b = r & (-r)
                j = b.bit_length() - 1
                nm = mask | b
                nrow = cost[nm]
                if nrow is None:
                    nrow = [INF] * n
                    cost[nm] = nrow
                    parent[nm] = [-1] * n
                v = c + d_last[j]
                if v < nrow[j]:
                    nrow[j] = v
                    parent[nm][j] = last
                r ^= b
    return cost, parent


def _close_tours(cost, in_home, n):
    """(best closed-tour travel, best last node) per mask from the open-path table."""
    size = 1 << n
    travel = [INF] * size
    last_of = [-1] * size
    travel[0] = 0.0
    for mask in range(1, size):
        row = cost[mask]
        if row is None:
            continue
        best, best_last = INF, -1
        for last in range(n):
            c = row[last]
            if c == INF:
                continue
            v = c + in_home[last]
            if v < best:
                best, best_last = v, last
        travel[mask] = best
        last_of[mask] = best_last
    return travel, last_of


def _reconstruct(mask, last, parent):
    order = []
    while last >= 0:
        order.append(last)
        nxt = parent[mask][last]
        mask ^= 1 << last
        last = nxt
    order.reverse()
    return order


class _TourTable:
    """Held-Karp results for one instance over all customer subsets."""

    def __init__(self, instance: Instance, prune_over_limit: bool = True):
        n = instance.n_customers
        if n > HELD_KARP_LIMIT:
            raise SizeLimitError(f"Held-Karp table limited to {HELD_KARP_LIMIT} customers, got {n}")
        rows = instance.matrix.rows
        self.n = n
        self.instance = instance
        services = [c.service_time for c in instance.customers]
        size = 1 << n
        service_sum = [0.0] * size
        for mask in range(1, size):
            lsb = mask & (-mask)
            service_sum[mask] = service_sum[mask ^ lsb] + services[lsb.bit_length() - 1]
        self.service_sum = service_sum

        limit = instance.max_daily_minutes + DURATION_TOL
        prune = None
        if prune_over_limit:
            prune = [service_sum[mask] > limit for mask in range(size)]
        out_home = [rows[0][j + 1] for j in range(n)]
        in_home = [rows[j + 1][0] for j in range(n)]
        dist = [[rows[i + 1][j + 1] for j in range(n)] for i in range(n)]
        self._cost, self._parent = _held_karp_tables(out_home, dist, n, prune)
        self.travel, self._last = _close_tours(self._cost, in_home, n)
        self.day_travel = [
            self.travel[mask] if self.travel[mask] + service_sum[mask] <= limit else INF
            for mask in range(size)
        ]

    def tour_ids(self, mask: int) -> list:
        """Visit order (customer ids) of the minimum-travel tour over ``mask``."""
        if mask == 0:
            return []
        order = _reconstruct(mask, self._last[mask], self._parent)
        return [self.instance.customers[j].id for j in order]


def min_tour_duration(customer_ids, instance: Instance) -> float:
    """Minimum duration (travel + service) of one closed home tour visiting the
    given customers, by Held-Karp over the subset. Limit: 15 customers."""
    ids = list(customer_ids)
    if len(ids) > HELD_KARP_LIMIT:
        raise SizeLimitError(f"min_tour_duration limited to {HELD_KARP_LIMIT} customers, got {len(ids)}")
    if not ids:
        return 0.0
    nodes = [instance.node_of(cid) for cid in ids]
    rows = instance.matrix.rows
    n = len(nodes)
    out_home = [rows[0][v] for v in nodes]
    in_home = [rows[v][0] for v in nodes]
    dist = [[rows[a][b] for b in nodes] for a in nodes]
    cost, _ = _held_karp_tables(out_home, dist, n)
    travel, _ = _close_tours(cost, in_home, n)
    service = sum(instance.customer(cid).service_time for cid in ids)
    return travel[(1 << n) - 1] + service


@dataclass
class OracleResult:
    """Outcome of an exact solve.

    ``enumerated_assignments`` counts the candidate visit-sets scanned (the
    day-assignment space collapses onto visit-sets because days are
    symmetric). ``fallback_used`` marks runs where the mandatory set was
    relaxed per the MWS high-score fallback.
    """

    status: str                      # Optimal | Infeasible | SizeExceeded
    solution: Optional[Solution] = None
    objective: float = 0.0
    enumerated_assignments: int = 0
    total_travel: float = 0.0
    fallback_used: bool = False


class ExactSolver:
    """Shares the per-instance Held-Karp and partition tables across models."""

    def __init__(self, instance: Instance, size_limit: int = 12):
        if instance.n_customers > size_limit:
            raise SizeLimitError(
                f"instance has {instance.n_customers} customers, exact limit is {size_limit}")
        self.instance = instance
        self.table = _TourTable(instance)
        self.size = 1 << instance.n_customers
        self._partition = self._partition_tables()

    def _partition_tables(self):
        """layers[k][mask] = min total travel splitting mask into <= k feasible days."""
        day = self.table.day_travel
        layers = [None, day]
        prev = day
        for _ in range(2, self.instance.horizon_days + 1):
            cur = [INF] * self.size
            for mask in range(self.size):
                best = prev[mask]  # leave the extra day empty
                sub = (mask - 1) & mask
                while sub:
                    ft = day[sub]
                    if ft < INF:
                        rest = prev[mask ^ sub]
                        if rest < INF:
                            v = ft + rest
                            if v < best:
                                best = v
                    sub = (sub - 1) & mask
                cur[mask] = best
            layers.append(cur)
            prev = cur
        return layers

    def _mask_of_ids(self, ids) -> int:
        mask = 0
        for cid in ids:
            mask |= 1 << (self.instance.node_of(cid) - 1)
        return mask

    def _split_days(self, mask: int) -> list:
        """Recover one optimal day partition of a feasible visit-set."""
        d = self.instance.horizon_days
        day = self.table.day_travel
        parts = []
        for k in range(d, 1, -1):
            target = self._partition[k][mask]
            if self._partition[k - 1][mask] == target:  # this day can stay empty
                parts.append(0)
                continue
            chosen = -1
            sub = (mask - 1) & mask
            while sub:
                if day[sub] < INF and self._partition[k - 1][mask ^ sub] < INF \
                        and day[sub] + self._partition[k - 1][mask ^ sub] == target:
                    chosen = sub
                    break
                sub = (sub - 1) & mask
            assert chosen >= 0, "partition backtrack lost the optimal split"
            parts.append(chosen)
            mask ^= chosen
        assert day[mask] < INF
        parts.append(mask)
        parts.reverse()
        return parts

    def solve(self, model: ScoreModel) -> OracleResult:
        inst = self.instance
        d = inst.horizon_days
        f_d = self._partition[d]
        weights = weight_vector(model, inst)
        mand_mask = self._mask_of_ids(model.mandatory_ids)
        opt_mask = (self.size - 1) & ~mand_mask

        w_sum = [0.0] * self.size
        for mask in range(1, self.size):
            lsb = mask & (-mask)
            w_sum[mask] = w_sum[mask ^ lsb] + weights[lsb.bit_length() - 1]

        best_obj, best_travel, best_mask = -INF, INF, -1
        count = 0
        sub = 0
        while True:
            mask = mand_mask | sub
            count += 1
            tv = f_d[mask]
            if tv < INF:
                obj = w_sum[mask]
                if obj > best_obj or (obj == best_obj and tv < best_travel):
                    best_obj, best_travel, best_mask = obj, tv, mask
            sub = (sub - opt_mask) & opt_mask
            if sub == 0:
                break

        if best_mask < 0:
            if model.fallback_on_infeasible and model.mandatory_ids:
                relaxed = relax_mandatory(model, inst)
                res = self.solve(relaxed)
                res.fallback_used = True
                res.enumerated_assignments += count
                return res
            return OracleResult(status="Infeasible", enumerated_assignments=count)

        parts = self._split_days(best_mask)
        tours = tuple(Tour(day=i, visit_order=tuple(self.table.tour_ids(p)))
                      for i, p in enumerate(parts))
        sol = Solution(instance_ref=inst.name, tours=tours)
        return OracleResult(status="Optimal", solution=sol, objective=best_obj,
                            enumerated_assignments=count, total_travel=best_travel)


def solve_exact(instance: Instance, model: ScoreModel, size_limit: int = 12) -> OracleResult:
    """Provably optimal solution, or Infeasible, or SizeExceeded beyond the limit."""
    if instance.n_customers > size_limit:
        return OracleResult(status="SizeExceeded")
    return ExactSolver(instance, size_limit=size_limit).solve(model)


# ---------------------------------------------------------------------------
# LP export
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(v, ".12g")

def export_lp(instance: Instance, model: ScoreModel) -> str:
    """Deterministic LP-format text of the multi-period orienteering program.

    Subtour elimination rows are emitted only for customer subsets of size 2
    and 3; the full family is exponential, so the export is incomplete without
    cut generation and exists for external-solver experimentation only.
    Variables: x_i_j_d (arc i->j used on day d; node 0 is home) and v_i_d
    (customer i visited on day d). Days are numbered from 1.
    """
    n = instance.n_customers
    days = range(1, instance.horizon_days + 1)
    nodes = range(n + 1)
    customers = range(1, n + 1)
    rows = instance.matrix.rows
    services = [0.0] + [c.service_time for c in instance.customers]
    weights = [0.0] + weight_vector(model, instance)
    mandatory = sorted(instance.node_of(cid) for cid in model.mandatory_ids)

    out = []
    out.append(f"\\ multi-period orienteering model: instance={instance.name!r} "
               f"variant={model.variant}")
    out.append("\\ subtour elimination emitted for |Q| <= 3 only; incomplete without cuts")
    out.append("Maximize")
    terms = [f"{_fmt(weights[i])} v_{i}_{d}" for i in customers
             if i not in mandatory for d in days]
    out.append(" obj: " + " + ".join(terms) if terms else " obj:")
    out.append("Subject To")
    for i in customers:
        lhs = " + ".join(f"v_{i}_{d}" for d in days)
        out.append(f" visit_once_{i}: {lhs} <= 1")
    for d in days:
        for i in nodes:
            pos = " + ".join(f"x_{i}_{j}_{d}" for j in nodes if j != i)
            neg = " - ".join(f"x_{j}_{i}_{d}" for j in nodes if j != i)
            out.append(f" flow_{i}_{d}: {pos} - {neg} = 0")
    for d in days:
        if n:
            out.append(f" depart_home_{d}: " +
                       " + ".join(f"x_0_{j}_{d}" for j in customers) + " = 1")
            out.append(f" return_home_{d}: " +
                       " + ".join(f"x_{j}_0_{d}" for j in customers) + " = 1")
    for d in days:
        for i in customers:
            lhs = " + ".join(f"x_{i}_{j}_{d}" for j in nodes if j != i)
            out.append(f" link_{i}_{d}: {lhs} - v_{i}_{d} = 0")
    for d in days:
        terms = [f"{_fmt(rows[i][j] + services[i])} x_{i}_{j}_{d}"
                 for i in nodes for j in nodes if i != j]
        if terms:
            out.append(f" worktime_{d}: " + " + ".join(terms) +
                       f" <= {_fmt(instance.max_daily_minutes)}")
    for i in mandatory:
        lhs = " + ".join(f"v_{i}_{d}" for d in days)
        out.append(f" mandatory_{i}: {lhs} = 1")
    for d in days:
        for a in customers:
            for b in range(a + 1, n + 1):
                out.append(f" subtour_{a}_{b}_{d}: x_{a}_{b}_{d} + x_{b}_{a}_{d} <= 1")
        for a in customers:
            for b in range(a + 1, n + 1):
                for c in range(b + 1, n + 1):
                    arcs = " + ".join(f"x_{i}_{j}_{d}"
                                      for i in (a, b, c) for j in (a, b, c) if i != j)
                    out.append(f" subtour_{a}_{b}_{c}_{d}: {arcs} <= 2")
    out.append("Binaries")
    names = [f"x_{i}_{j}_{d}" for d in days for i in nodes for j in nodes if i != j]
    names += [f"v_{i}_{d}" for d in days for i in customers]
    for k in range(0, len(names), 8):
        out.append(" " + " ".join(names[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
