"""Two-phase multi-start adaptive large neighborhood search (2MLS).

Phase one builds starting solutions: per start, one seed customer per day is
sampled k-means++ style (selection likelihood grows with distance to home and
to already chosen seeds, drawn from the mandatory set when one exists), then
one insertion strategy fills the tours; the best of the starts seeds phase two.

Phase two is a destroy/repair loop. Six removal and five insertion strategies
are drawn by roulette over adaptive weights; repaired candidates are accepted
when they improve the objective, tie on objective with less travel, or pass a
reheating test whose temperature grows with the number of iterations since the
last best-solution improvement. The search stops after ``stop_stagnation``
iterations without improving the best solution.

WORST-ANGLE needs customer coordinates; on matrix-only instances it is left
out of the roulette and calling it directly raises.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from heapq import nsmallest
from typing import Optional

import numpy as np

from .core import DURATION_TOL, Instance, Solution, check_feasible
from .scoring import ScoreModel, relax_mandatory, weight_vector

REMOVAL_STRATEGIES = ("RND-NN", "SEQU-NN", "SCORE-DELTA", "SKEL-TOUR",
                      "WORST-DETOUR", "WORST-ANGLE")
INSERTION_STRATEGIES = ("RND", "MAX-SCORE", "SCORE-RATIO", "SCORE-RATIO2", "GREEDY")

_OBJ_TOL = 1e-9
_RATIO_FLOOR = 1e-9


@dataclass
class SolverConfig:
    starts: int = 10                  # multi-start constructions
    stop_stagnation: int = 300        # iterations without a new best
    reheat_period: float = 50.0
    temp0: float = 0.01
    insertion_noise: float = 0.05     # random-customer probability per insertion step
    neighbor_k: int = 5               # unvisited neighbors pooled per removed customer
    sequence_len: tuple = (2, 6)      # SEQU-NN sequence length range
    skeleton_segment: int = 3         # SKEL-TOUR removed-segment length
    segment_iters: int = 100          # adaptive weight update period
    smoothing: float = 0.8
    score_new_best: float = 33.0
    score_improving: float = 13.0
    score_accepted: float = 9.0
    weight_floor: float = 0.01
    max_wall_ms: Optional[float] = None
    rng_seed: int = 0
    validate: bool = False            # feasibility-check accepted candidates (tests)


@dataclass
class RunStats:
    status: str = "ok"                # ok | infeasible
    iterations: int = 0
    wall_ms: float = 0.0
    objective: float = 0.0
    total_travel: float = 0.0
    starts_built: int = 0
    fallback_used: bool = False
    removal_uses: dict = field(default_factory=dict)
    insertion_uses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "wall_ms": self.wall_ms,
            "objective": self.objective,
            "total_travel": self.total_travel,
            "starts_built": self.starts_built,
            "fallback_used": self.fallback_used,
            "removal_uses": dict(self.removal_uses),
            "insertion_uses": dict(self.insertion_uses),
        }


class SearchContext:
    """Immutable per-run data: instance arrays, model weights, config, rng."""

    def __init__(self, instance: Instance, model: ScoreModel, config: SolverConfig,
                 rng: Optional[np.random.Generator] = None):
        self.instance = instance
        self.model = model
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
        self.n = instance.n_customers
        self.t = instance.matrix.rows
        self.s = [0.0] + [c.service_time for c in instance.customers]
        self.w = [0.0] + weight_vector(model, instance)
        self.limit = instance.max_daily_minutes + DURATION_TOL
        mand = [False] * (self.n + 1)
        for cid in model.mandatory_ids:
            mand[instance.node_of(cid)] = True
        self.mandatory = mand
        self.mandatory_nodes = [i for i in range(1, self.n + 1) if mand[i]]
        self.has_coords = instance.has_coordinates and instance.home_xy is not None
        if self.has_coords:
            self.xy = [instance.home_xy] + [(c.x, c.y) for c in instance.customers]
        self.removal_names = [name for name in REMOVAL_STRATEGIES
                              if name != "WORST-ANGLE" or self.has_coords]

    def sym_t(self, a: int, b: int) -> float:
        return 0.5 * (self.t[a][b] + self.t[b][a])


class Plan:
    """Mutable working solution over matrix node indices."""

    __slots__ = ("tours", "dur", "visited", "obj", "travel")

    def __init__(self, days: int):
        self.tours = [[] for _ in range(days)]
        self.dur = [0.0] * days
        self.visited = set()
        self.obj = 0.0
        self.travel = 0.0

    def copy(self) -> "Plan":
        p = Plan.__new__(Plan)
        p.tours = [list(t) for t in self.tours]
        p.dur = list(self.dur)
        p.visited = set(self.visited)
        p.obj = self.obj
        p.travel = self.travel
        return p

    def insert(self, ctx: SearchContext, node: int, day: int, pos: int, delta: float):
        self.tours[day].insert(pos, node)
        self.dur[day] += delta
        self.travel += delta - ctx.s[node]
        self.obj += ctx.w[node]
        self.visited.add(node)

    def remove_nodes(self, ctx: SearchContext, nodes: set):
        """Drop the given nodes from all tours and refresh day aggregates."""
        t = ctx.t
        for day, tour in enumerate(self.tours):
            if not any(v in nodes for v in tour):
                continue
            new_tour = [v for v in tour if v not in nodes]
            self.tours[day] = new_tour
            dur = 0.0
            prev = 0
            for v in new_tour:
                dur += t[prev][v] + ctx.s[v]
                prev = v
            dur += t[prev][0]
            service = sum(ctx.s[v] for v in new_tour)
            self.travel += (dur - service) - (self.dur[day] - sum(ctx.s[v] for v in tour))
            self.dur[day] = dur
        for v in nodes:
            if v in self.visited:
                self.visited.discard(v)
                self.obj -= ctx.w[v]

    def to_solution(self, ctx: SearchContext) -> Solution:
        inst = ctx.instance
        ids = [None] + [c.id for c in inst.customers]
        return Solution.from_visit_lists(inst, [[ids[v] for v in tour] for tour in self.tours])


@dataclass
class SearchState:
    current: Plan
    best: Plan
    removed_pool: set = field(default_factory=set)
    iter: int = 0
    iters_since_best: int = 0
    temperature: float = 0.0
    removal_weights: dict = field(default_factory=dict)
    insertion_weights: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# insertion machinery
# ---------------------------------------------------------------------------

def _scan_day(ctx: SearchContext, plan: Plan, node: int, day: int):
    """Cheapest feasible insertion (delta, pos) of node into one day, else None."""
    t = ctx.t
    s_node = ctx.s[node]
    cap = ctx.limit - plan.dur[day]
    if cap < s_node:  # service alone cannot fit (travel detours assumed >= 0)
        return None
    tour = plan.tours[day]
    row_node = t[node]
    best_delta = None
    best_pos = -1
    a = 0
    for pos, b in enumerate(tour):
        delta = t[a][node] + row_node[b] - t[a][b] + s_node
        if delta <= cap and (best_delta is None or delta < best_delta):
            best_delta = delta
            best_pos = pos
        a = b
    delta = t[a][node] + row_node[0] - t[a][0] + s_node
    pos = len(tour)
    if delta <= cap and (best_delta is None or delta < best_delta):
        best_delta = delta
        best_pos = pos
    if best_delta is None:
        return None
    return best_delta, best_pos


def _best_over_days(entry):
    best = None
    best_day = -1
    for day, e in enumerate(entry):
        if e is not None and (best is None or e[0] < best[0]):
            best = e
            best_day = day
    return best, best_day


def _insert_pass(ctx: SearchContext, plan: Plan, nodes: list, strategy: str,
                 noise: float, require_all: bool) -> bool:
    """Insert nodes one by one at their cheapest feasible position.

    Returns False as soon as a node cannot be placed while ``require_all``
    (mandatory phase); otherwise unplaceable nodes are left unvisited.
    """
    if not nodes:
        return True
    days = range(len(plan.tours))
    cand = {c: [_scan_day(ctx, plan, c, d) for d in days] for c in nodes}
    remaining = sorted(nodes)
    rng = ctx.rng
    w = ctx.w
    while remaining:
        feasible = []
        for c in remaining:
            best, day = _best_over_days(cand[c])
            if best is not None:
                feasible.append((c, best[0], best[1], day))
        if not feasible:
            return not require_all
        if noise > 0.0 and rng.random() < noise:
            c, delta, pos, day = feasible[rng.integers(len(feasible))]
        elif strategy == "RND":
            c, delta, pos, day = feasible[rng.integers(len(feasible))]
        elif strategy == "MAX-SCORE":
            c, delta, pos, day = max(feasible, key=lambda f: (w[f[0]], -f[0]))
        elif strategy == "GREEDY":
            c, delta, pos, day = min(feasible, key=lambda f: (f[1], f[0]))
        elif strategy == "SCORE-RATIO":
            c, delta, pos, day = max(
                feasible, key=lambda f: (w[f[0]] / max(f[1], _RATIO_FLOOR), -f[0]))
        elif strategy == "SCORE-RATIO2":
            c, delta, pos, day = max(
                feasible, key=lambda f: (w[f[0]] ** 2 / max(f[1], _RATIO_FLOOR), -f[0]))
        else:
            raise ValueError(f"unknown insertion strategy {strategy!r}")
        plan.insert(ctx, c, day, pos, delta)
        remaining.remove(c)
        del cand[c]
        for o in remaining:
            cand[o][day] = _scan_day(ctx, plan, o, day)
    return True


def insert(state: SearchState, strategy: str, ctx: SearchContext) -> bool:
    """Repair: reinsert the removed pool, mandatory customers first.

    Mandatory insertions ignore the diversification noise; if one of them has
    no feasible position the repair fails and the caller must discard the
    candidate. Optional pool customers without a feasible position are left
    unvisited. Clears the pool on success.
    """
    if strategy not in INSERTION_STRATEGIES:
        raise ValueError(f"unknown insertion strategy {strategy!r}")
    pool = [c for c in state.removed_pool if c not in state.current.visited]
    mandatory = [c for c in pool if ctx.mandatory[c]]
    optional = [c for c in pool if not ctx.mandatory[c]]
    if not _insert_pass(ctx, state.current, mandatory, strategy, 0.0, require_all=True):
        return False
    _insert_pass(ctx, state.current, optional, strategy, ctx.config.insertion_noise,
                 require_all=False)
    state.removed_pool = set()
    return True


# ---------------------------------------------------------------------------
# removal machinery
# ---------------------------------------------------------------------------

def removal_count(n_customers: int, visited: int, rng: np.random.Generator) -> int:
    """Sample the number of visited customers to remove.

    The range is [max(0.1 n, 10), min(0.3 n, 100)]; when the bounds cross
    (small n) the lower bound wins, and the draw is clamped by the number of
    currently visited customers.
    """
    lo = max(0.1 * n_customers, 10.0)
    hi = min(0.3 * n_customers, 100.0)
    if hi < lo:
        hi = lo
    lo_i = math.ceil(lo - 1e-9)
    hi_i = max(math.floor(hi + 1e-9), lo_i)
    q = int(rng.integers(lo_i, hi_i + 1))
    return min(q, visited)


def _detour_of(ctx: SearchContext, tour: list, pos: int) -> float:
    t = ctx.t
    node = tour[pos]
    a = tour[pos - 1] if pos > 0 else 0
    b = tour[pos + 1] if pos + 1 < len(tour) else 0
    return t[a][node] + t[node][b] - t[a][b]


def _angle_at(ctx: SearchContext, tour: list, pos: int) -> float:
    """Interior angle at a visit; small angles mean the tour doubles back."""
    xy = ctx.xy
    node = tour[pos]
    a = tour[pos - 1] if pos > 0 else 0
    b = tour[pos + 1] if pos + 1 < len(tour) else 0
    cx, cy = xy[node]
    ux, uy = xy[a][0] - cx, xy[a][1] - cy
    vx, vy = xy[b][0] - cx, xy[b][1] - cy
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    cosang = max(-1.0, min(1.0, (ux * vx + uy * vy) / (nu * nv)))
    return math.acos(cosang)


def _pick_victims(ctx: SearchContext, plan: Plan, strategy: str, q: int):
    """Visited nodes to remove, per strategy."""
    rng = ctx.rng
    visited_sorted = sorted(plan.visited)
    if strategy == "RND-NN":
        idx = rng.permutation(len(visited_sorted))[:q]
        return [visited_sorted[i] for i in sorted(idx)]
    if strategy == "SEQU-NN":
        lo, hi = ctx.config.sequence_len
        victims = []
        tours = [list(t) for t in plan.tours]
        guard = 0
        while len(victims) < q and guard < 50:
            nonempty = [d for d, t in enumerate(tours) if t]
            if not nonempty:
                break
            day = nonempty[rng.integers(len(nonempty))]
            tour = tours[day]
            length = min(int(rng.integers(lo, hi + 1)), q - len(victims), len(tour))
            start = int(rng.integers(0, len(tour) - length + 1)) if len(tour) > length else 0
            victims.extend(tour[start:start + length])
            del tour[start:start + length]
            guard += 1
        return victims
    if strategy == "SCORE-DELTA":
        w = ctx.w
        ranked = sorted(visited_sorted, key=lambda v: (w[v], v))
        return ranked[:q]
    if strategy == "SKEL-TOUR":
        nonempty = [d for d, t in enumerate(plan.tours) if t]
        if not nonempty:
            return []
        tour = plan.tours[nonempty[rng.integers(len(nonempty))]]
        seg = ctx.config.skeleton_segment
        return [v for i, v in enumerate(tour) if i % (seg + 1) < seg]
    if strategy == "WORST-DETOUR":
        scored = []
        for tour in plan.tours:
            for pos in range(len(tour)):
                scored.append((-_detour_of(ctx, tour, pos), tour[pos]))
        scored.sort()
        return [node for _, node in scored[:q]]
    if strategy == "WORST-ANGLE":
        if not ctx.has_coords:
            raise ValueError("WORST-ANGLE requires customer coordinates")
        scored = []
        for tour in plan.tours:
            for pos in range(len(tour)):
                scored.append((_angle_at(ctx, tour, pos), tour[pos], pos, tour))
        scored.sort(key=lambda e: (e[0], e[1]))
        victims = []
        seen = set()
        for _, node, pos, tour in scored:
            if len(victims) >= q:
                break
            for cand in (tour[pos - 1] if pos > 0 else 0, node,
                         tour[pos + 1] if pos + 1 < len(tour) else 0):
                if cand != 0 and cand not in seen and len(victims) < q:
                    seen.add(cand)
                    victims.append(cand)
        return victims
    raise ValueError(f"unknown removal strategy {strategy!r}")


def remove(state: SearchState, strategy: str, ctx: SearchContext) -> set:
    """Destroy: drop sampled visited customers, pool them for reinsertion.

    Unvisited customers join the pool too: the q highest-weight ones for
    SCORE-DELTA, otherwise the ``neighbor_k`` nearest unvisited neighbors of
    each removed customer. No-op when nothing is visited. Returns the pool.
    """
    plan = state.current
    if not plan.visited:
        state.removed_pool = set()
        return state.removed_pool
    q = removal_count(ctx.n, len(plan.visited), ctx.rng)
    victims = _pick_victims(ctx, plan, strategy, q)
    unvisited_before = [v for v in range(1, ctx.n + 1) if v not in plan.visited]
    pool = set(victims)
    if strategy == "SCORE-DELTA":
        w = ctx.w
        ranked = sorted(unvisited_before, key=lambda v: (-w[v], v))
        pool.update(ranked[:q])
    else:
        k = ctx.config.neighbor_k
        for r in victims:
            row = ctx.t[r]
            pool.update(nsmallest(k, unvisited_before, key=lambda v: (row[v], v)))
    plan.remove_nodes(ctx, set(victims))
    state.removed_pool = pool
    return pool


# ---------------------------------------------------------------------------
# acceptance
# ---------------------------------------------------------------------------

def _lex_better(obj_a: float, travel_a: float, obj_b: float, travel_b: float) -> bool:
    """(objective up, then travel down) strict ordering with float tolerance."""
    if obj_a > obj_b + _OBJ_TOL:
        return True
    return abs(obj_a - obj_b) <= _OBJ_TOL and travel_a < travel_b - 1e-9


def accept(state: SearchState, candidate: Plan, ctx: SearchContext) -> bool:
    """Accept improving candidates; tie on objective with less travel; otherwise
    reheat: accept a quality loss with probability exp(-loss / temperature),
    the loss normalized by the best objective and the temperature growing with
    the iterations since the last best-solution improvement."""
    cur = state.current
    if _lex_better(candidate.obj, candidate.travel, cur.obj, cur.travel):
        return True
    cfg = ctx.config
    state.temperature = cfg.temp0 * (1.0 + state.iters_since_best / cfg.reheat_period)
    if state.temperature <= 0.0:
        return False
    base = state.best.obj if state.best.obj > _OBJ_TOL else 1.0
    loss = (cur.obj - candidate.obj) / base
    return ctx.rng.random() < math.exp(-loss / state.temperature)


# ---------------------------------------------------------------------------
# construction and main loop
# ---------------------------------------------------------------------------

def _pick_seeds(ctx: SearchContext, rng: np.random.Generator) -> list:
    """One seed node per day, k-means++ style: selection probability grows with
    the squared distance to home and to seeds already chosen. Mandatory
    customers are preferred as seeds while any remain."""
    days = ctx.instance.horizon_days
    mandatory = list(ctx.mandatory_nodes)
    optional = [v for v in range(1, ctx.n + 1) if not ctx.mandatory[v]]
    seeds = []
    refs = [0]
    for _ in range(days):
        candidates = mandatory if mandatory else optional
        if not candidates:
            break
        d2 = [min(ctx.sym_t(c, r) for r in refs) ** 2 for c in candidates]
        total = sum(d2)
        if total <= 0.0:
            choice = 0
        else:
            x = rng.random() * total
            acc = 0.0
            choice = len(candidates) - 1
            for i, v in enumerate(d2):
                acc += v
                if x < acc:
                    choice = i
                    break
        node = candidates.pop(choice)
        seeds.append(node)
        refs.append(node)
    return seeds


def multistart(instance: Instance, model: ScoreModel, runs: int = 10,
               rng_seed: int = 0, ctx: Optional[SearchContext] = None) -> Optional[Plan]:
    """Best of ``runs`` constructed starts, cycling through the insertion
    strategies. Returns None when no start could place all mandatory customers."""
    if ctx is None:
        ctx = SearchContext(instance, model, SolverConfig(rng_seed=rng_seed))
    rng = ctx.rng
    best = None
    for i in range(runs):
        strategy = INSERTION_STRATEGIES[i % len(INSERTION_STRATEGIES)]
        plan = Plan(instance.horizon_days)
        for day, seed in enumerate(_pick_seeds(ctx, rng)):
            scan = _scan_day(ctx, plan, seed, day)
            if scan is not None:
                plan.insert(ctx, seed, day, scan[1], scan[0])
        pool = [v for v in range(1, ctx.n + 1) if v not in plan.visited]
        mandatory = [c for c in pool if ctx.mandatory[c]]
        optional = [c for c in pool if not ctx.mandatory[c]]
        if not _insert_pass(ctx, plan, mandatory, strategy, 0.0, require_all=True):
            continue
        _insert_pass(ctx, plan, optional, strategy, ctx.config.insertion_noise,
                     require_all=False)
        if best is None or _lex_better(plan.obj, plan.travel, best.obj, best.travel):
            best = plan
    return best


def _segment_update(weights: dict, scores: dict, uses: dict, cfg: SolverConfig):
    for name in weights:
        if uses.get(name, 0) > 0:
            perf = scores.get(name, 0.0) / uses[name]
            weights[name] = max(cfg.smoothing * weights[name]
                                + (1.0 - cfg.smoothing) * perf, cfg.weight_floor)
        scores[name] = 0.0
        uses[name] = 0


def _roulette(rng: np.random.Generator, names: list, weights: dict) -> str:
    vals = [weights[n] for n in names]
    total = sum(vals)
    x = rng.random() * total
    acc = 0.0
    for name, v in zip(names, vals):
        acc += v
        if x < acc:
            return name
    return names[-1]


def run(instance: Instance, model: ScoreModel, config: Optional[SolverConfig] = None):
    """Full 2MLS run: multistart construction plus the adaptive destroy/repair
    loop. Returns (Solution or None, RunStats); status is "infeasible" when the
    mandatory set cannot be placed and the model carries no fallback."""
    cfg = config if config is not None else SolverConfig()
    t_start = time.perf_counter()
    ctx = SearchContext(instance, model, cfg)
    stats = RunStats()

    start = multistart(instance, model, runs=cfg.starts, ctx=ctx)
    if start is None and model.fallback_on_infeasible and model.mandatory_ids:
        ctx = SearchContext(instance, relax_mandatory(model, instance), cfg, rng=ctx.rng)
        stats.fallback_used = True
        start = multistart(instance, ctx.model, runs=cfg.starts, ctx=ctx)
    if start is None:
        stats.status = "infeasible"
        stats.wall_ms = (time.perf_counter() - t_start) * 1000.0
        return None, stats
    stats.starts_built = cfg.starts

    state = SearchState(current=start, best=start.copy())
    state.removal_weights = {name: 1.0 for name in ctx.removal_names}
    state.insertion_weights = {name: 1.0 for name in INSERTION_STRATEGIES}
    rem_scores = {name: 0.0 for name in ctx.removal_names}
    rem_uses = {name: 0 for name in ctx.removal_names}
    ins_scores = {name: 0.0 for name in INSERTION_STRATEGIES}
    ins_uses = {name: 0 for name in INSERTION_STRATEGIES}
    stats.removal_uses = {name: 0 for name in ctx.removal_names}
    stats.insertion_uses = {name: 0 for name in INSERTION_STRATEGIES}
    rng = ctx.rng

    while state.iters_since_best < cfg.stop_stagnation:
        if cfg.max_wall_ms is not None \
                and (time.perf_counter() - t_start) * 1000.0 > cfg.max_wall_ms:
            break
        state.iter += 1
        state.iters_since_best += 1
        removal = _roulette(rng, ctx.removal_names, state.removal_weights)
        insertion = _roulette(rng, list(INSERTION_STRATEGIES), state.insertion_weights)
        rem_uses[removal] += 1
        ins_uses[insertion] += 1
        stats.removal_uses[removal] += 1
        stats.insertion_uses[insertion] += 1

        snapshot = state.current.copy()
        remove(state, removal, ctx)
        repaired = insert(state, insertion, ctx)
        gain = 0.0
        if repaired:
            candidate = state.current
            state.current = snapshot
            if accept(state, candidate, ctx):
                if cfg.validate:
                    report = check_feasible(candidate.to_solution(ctx), instance)
                    assert report.ok, f"accepted infeasible candidate: {report.violations}"
                if _lex_better(candidate.obj, candidate.travel,
                               state.current.obj, state.current.travel):
                    gain = cfg.score_improving
                else:
                    gain = cfg.score_accepted
                state.current = candidate
                if _lex_better(candidate.obj, candidate.travel,
                               state.best.obj, state.best.travel):
                    state.best = candidate.copy()
                    state.iters_since_best = 0
                    gain = cfg.score_new_best
        else:
            state.current = snapshot
        state.removed_pool = set()
        rem_scores[removal] += gain
        ins_scores[insertion] += gain

        if state.iter % cfg.segment_iters == 0:
            _segment_update(state.removal_weights, rem_scores, rem_uses, cfg)
            _segment_update(state.insertion_weights, ins_scores, ins_uses, cfg)

    stats.iterations = state.iter
    stats.objective = state.best.obj
    stats.total_travel = state.best.travel
    stats.wall_ms = (time.perf_counter() - t_start) * 1000.0
    return state.best.to_solution(ctx), stats


def solve_best_of(instance: Instance, model: ScoreModel, runs: int = 10,
                  rng_seed: int = 0, config: Optional[SolverConfig] = None):
    """The best-of-N protocol: independent runs with derived seeds.

    Returns (best Solution or None, best RunStats or None, [RunStats per run]).
    """
    base = config if config is not None else SolverConfig()
    all_stats = []
    best_sol, best_stats = None, None
    for r in range(runs):
        cfg = SolverConfig(**{**base.__dict__, "rng_seed": derive_seed(rng_seed, f"run{r}")})
        sol, st = run(instance, model, cfg)
        all_stats.append(st)
        if sol is not None and (best_stats is None or _lex_better(
                st.objective, st.total_travel, best_stats.objective, best_stats.total_travel)):
            best_sol, best_stats = sol, st
    return best_sol, best_stats, all_stats


def derive_seed(master: int, tag: str) -> int:
    """Stable sub-seed from a master seed and a text tag."""
    import hashlib
    digest = hashlib.sha256(f"{master}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
