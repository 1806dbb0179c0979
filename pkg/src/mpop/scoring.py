"""Customer scoring model variants.

Each variant turns an instance into an effective objective weight vector plus a
mandatory set. The planner's objective sums weights over visited customers;
mandatory customers always carry weight 0 because visiting them is a
constraint, not a reward. Evaluation metrics still credit their true scores.

Variants:

- NS    every optional customer weighs 1 (maximize visit count),
- MNS   NS plus manually selected customers made mandatory,
- sABC  hierarchical class weights: any A customer outweighs all B and C
        customers together, any B outweighs all C,
- wABC  fixed class weights (defaults 15/5/1) or per-class mean scores,
- WS    raw predicted scores as weights,
- MWS   WS plus extra mandatory customers, optionally relaxable when the
        mandatory set makes an instance infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Instance, UnknownCustomerError, sorted_ids

VARIANTS = ("NS", "MNS", "sABC", "wABC", "WS", "MWS")

WABC_DEFAULTS = (15.0, 5.0, 1.0)


@dataclass(frozen=True)
class ScoreModel:
    """Effective objective of one model variant on one instance.

    ``weights`` maps every customer id to its objective weight (0 on mandatory
    customers); ``mandatory_ids`` is the effective mandatory set of the
    variant; ``params`` records variant-specific inputs such as the wABC class
    weights or the MWS fallback flag.
    """

    variant: str
    weights: dict
    mandatory_ids: frozenset
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        for cid, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative weight for customer {cid!r}")

    @property
    def fallback_on_infeasible(self) -> bool:
        return bool(self.params.get("fallback_on_infeasible", False))


def _check_ids(instance: Instance, ids) -> frozenset:
    for cid in ids:
        instance.node_of(cid)  # raises UnknownCustomerError
    return frozenset(ids)


def _weights(instance: Instance, mandatory: frozenset, weight_of) -> dict:
    return {c.id: 0.0 if c.id in mandatory else float(weight_of(c))
            for c in instance.customers}


def build_ns(instance: Instance) -> ScoreModel:
    """No scores: unit weight per optional customer."""
    mand = frozenset(instance.mandatory_ids)
    return ScoreModel("NS", _weights(instance, mand, lambda c: 1.0), mand)


def build_mns(instance: Instance, manual_ids) -> ScoreModel:
    """Manually selected customers join the mandatory set; the rest weigh 1."""
    manual = _check_ids(instance, manual_ids)
    mand = frozenset(instance.mandatory_ids) | manual
    return ScoreModel("MNS", _weights(instance, mand, lambda c: 1.0), mand,
                      params={"manual_ids": sorted_ids(manual)})


def class_partition(instance: Instance) -> dict:
    """Customer ids per ABC class. Raises if any customer is unclassified."""
    part = {"A": [], "B": [], "C": []}
    for c in instance.customers:
        if c.abc_class not in part:
            raise ValueError(f"customer {c.id!r} has no ABC class; classify the instance first")
        part[c.abc_class].append(c.id)
    return part


def sabc_class_weights(n_b: int, n_c: int) -> tuple[float, float, float]:
    """Hierarchical (A, B, C) weights from the B- and C-class cardinalities.

    pC = 1, pB = pC * |C| + 1, pA = pC * |C| + pB * |B| + 1, so one A customer
    outweighs every B and C customer combined and one B outweighs every C.
    """
    p_c = 1.0
    p_b = p_c * n_c + 1.0
    p_a = p_c * n_c + p_b * n_b + 1.0
    return p_a, p_b, p_c


def build_sabc(instance: Instance) -> ScoreModel:
    part = class_partition(instance)
    p_a, p_b, p_c = sabc_class_weights(len(part["B"]), len(part["C"]))
    by_class = {"A": p_a, "B": p_b, "C": p_c}
    mand = frozenset(instance.mandatory_ids)
    return ScoreModel("sABC", _weights(instance, mand, lambda c: by_class[c.abc_class]),
                      mand, params={"class_weights": (p_a, p_b, p_c)})


def build_wabc(instance: Instance, p_a: float = WABC_DEFAULTS[0],
               p_b: float = WABC_DEFAULTS[1], p_c: float = WABC_DEFAULTS[2]) -> ScoreModel:
    """Weighted ABC classes with judgmental weights, p_a >= p_b >= p_c > 0."""
    if not (p_a >= p_b >= p_c > 0):
        raise ValueError(f"wABC weights must satisfy pA >= pB >= pC > 0, got {(p_a, p_b, p_c)}")
    class_partition(instance)  # validates classification
    by_class = {"A": float(p_a), "B": float(p_b), "C": float(p_c)}
    mand = frozenset(instance.mandatory_ids)
    return ScoreModel("wABC", _weights(instance, mand, lambda c: by_class[c.abc_class]),
                      mand, params={"class_weights": (float(p_a), float(p_b), float(p_c))})


def build_wabc_class_means(instance: Instance) -> ScoreModel:
    """wABC with each class weighted by its mean raw score."""
    part = class_partition(instance)
    means = {}
    for cls in ("A", "B", "C"):
        ids = part[cls]
        if ids:
            means[cls] = sum(instance.customer(cid).score for cid in ids) / len(ids)
    # empty classes get the smallest present mean; no customer carries it anyway
    floor = min(means.values()) if means else 1.0
    p_a = means.get("A", floor)
    p_b = means.get("B", floor)
    p_c = means.get("C", floor)
    return build_wabc(instance, p_a, p_b, p_c)


def build_ws(instance: Instance) -> ScoreModel:
    """With scores: raw predicted scores become the weights."""
    for c in instance.customers:
        if c.score < 0:
            raise ValueError(f"customer {c.id!r} has negative score {c.score}; "
                             "WS weights must be non-negative")
    mand = frozenset(instance.mandatory_ids)
    return ScoreModel("WS", _weights(instance, mand, lambda c: c.score), mand)


def build_mws(instance: Instance, extra_mandatory=(), fallback_on_infeasible: bool = False) -> ScoreModel:
    """WS weights with an enlarged mandatory set.

    With ``fallback_on_infeasible`` the solvers may demote the mandatory set to
    optional (see :func:`relax_mandatory`) when no feasible solution exists.
    """
    extra = _check_ids(instance, extra_mandatory)
    for c in instance.customers:
        if c.score < 0:
            raise ValueError(f"customer {c.id!r} has negative score {c.score}; "
                             "MWS weights must be non-negative")
    mand = frozenset(instance.mandatory_ids) | extra
    return ScoreModel("MWS", _weights(instance, mand, lambda c: c.score), mand,
                      params={"extra_mandatory": sorted_ids(extra),
                              "fallback_on_infeasible": fallback_on_infeasible})


def relax_mandatory(model: ScoreModel, instance: Instance) -> ScoreModel:
    """Demote every mandatory customer to optional with a dominating weight.

    The demoted customers get weight (sum of all raw scores) + 1 each, so any
    solution visiting more of them beats any solution visiting fewer: the
    states behave like a two-class hierarchy on top of the WS weights.
    """
    big = sum(c.score for c in instance.customers) + 1.0
    weights = dict(model.weights)
    for cid in model.mandatory_ids:
        weights[cid] = big
    params = dict(model.params)
    params["relaxed_mandatory"] = sorted_ids(model.mandatory_ids)
    params["relaxed_weight"] = big
    return ScoreModel(model.variant, weights, frozenset(), params)


def weight_vector(model: ScoreModel, instance: Instance) -> list[float]:
    """Weights ordered by matrix node index 1..n, for array-based solvers."""
    try:
        return [model.weights[c.id] for c in instance.customers]
    except KeyError as exc:
        raise UnknownCustomerError(exc.args[0]) from None
