"""Prediction-error sensitivity study.

Planning always uses the predicted scores; simulated realizations model the
value revealed after a visit. Residuals are unbiased Gaussians whose standard
deviation is a coefficient of variation times the instance's mean score.
Realizations may come out negative and are kept as-is, clamping would bias the
unbiased-forecast assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Instance, Solution
from .solver import derive_seed

DEFAULT_COE_LEVELS = tuple(round(0.1 * i, 1) for i in range(1, 14))  # 0.1 .. 1.3


@dataclass(frozen=True)
class Scenario:
    """One simulated score realization of an instance."""

    coe: float
    scenario_index: int
    p_sim: dict            # customer id -> realized score
    sigma: float
    rng_seed: int


def simulate_scores(instance: Instance, coe: float, rng_seed: int = 0,
                    scenario_index: int = 0) -> Scenario:
    """Draw p_sim = p + e with e ~ N(0, coe * mean(p)) per customer."""
    if instance.n_customers == 0:
        raise ValueError("cannot simulate scores for an empty instance")
    if coe <= 0:
        raise ValueError("coe must be > 0")
    scores = np.array([c.score for c in instance.customers], dtype=float)
    sigma = coe * float(scores.mean())
    rng = np.random.default_rng(rng_seed)
    noise = rng.normal(0.0, sigma, size=len(scores))
    p_sim = {c.id: float(scores[i] + noise[i]) for i, c in enumerate(instance.customers)}
    return Scenario(coe=coe, scenario_index=scenario_index, p_sim=p_sim,
                    sigma=sigma, rng_seed=rng_seed)


def scenario_grid(instance: Instance, coe_levels: Optional[Sequence[float]] = None,
                  scenarios_per_level: int = 10, rng_seed: int = 0) -> list:
    """The full scenario grid (default 13 coe levels x 10 scenarios), with
    per-scenario seeds derived from the master seed: deterministic and
    independent of evaluation order."""
    levels = DEFAULT_COE_LEVELS if coe_levels is None else tuple(coe_levels)
    grid = []
    for coe in levels:
        for k in range(scenarios_per_level):
            seed = derive_seed(rng_seed, f"coe={coe!r}:scenario={k}")
            grid.append(simulate_scores(instance, coe, rng_seed=seed, scenario_index=k))
    return grid


def evaluate_under_scenario(solutions: Mapping[str, Solution], scenario: Scenario,
                            instance: Instance) -> dict:
    """Realized simulated score per model and its ratio to the WS model.

    ``solutions`` maps model variant names to solutions; the WS entry is the
    reference and must be present. rws_sim is None when WS realizes 0.
    """
    if "WS" not in solutions:
        raise ValueError("evaluate_under_scenario needs the WS reference solution")
    p_sim = scenario.p_sim
    realized = {}
    for name, sol in solutions.items():
        realized[name] = sum(p_sim[cid] for cid in sol.visited)
    ws = realized["WS"]
    out = {}
    for name in solutions:
        rws_sim = realized[name] / ws if ws != 0 else None
        out[name] = {"realized_sim": realized[name], "rws_sim": rws_sim}
    return out
