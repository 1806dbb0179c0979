"""Shared instance factories for the test suite."""

import numpy as np
import pytest

from mpop.core import Customer, Instance, TravelMatrix


def manual_instance(times, services, scores=None, mandatory=(), horizon_days=1,
                    tmax=480.0, abc=None, name="manual"):
    """Instance from an explicit matrix; customer ids are c1, c2, ..."""
    n = len(services)
    scores = scores if scores is not None else [1.0] * n
    abc = abc if abc is not None else [None] * n
    customers = [
        Customer(id=f"c{i + 1}", service_time=float(services[i]), score=float(scores[i]),
                 abc_class=abc[i], mandatory=(f"c{i + 1}" in mandatory))
        for i in range(n)
    ]
    return Instance(customers, horizon_days=horizon_days, max_daily_minutes=tmax,
                    matrix=TravelMatrix(times), name=name)


def random_instance(n, horizon_days=2, seed=0, tmax=480.0, square=120.0,
                    service_range=(10.0, 30.0), score_range=(1.0, 100.0),
                    n_mandatory=0, classify=False, name=None):
    """Random coordinate-based instance; optionally classified and with top-score
    mandatory customers."""
    from mpop.instances import classify_instance, select_mandatory, with_mandatory

    rng = np.random.default_rng(seed)
    customers = [
        Customer(id=f"c{i + 1:02d}", x=float(rng.uniform(0, square)),
                 y=float(rng.uniform(0, square)),
                 service_time=float(rng.uniform(*service_range)),
                 score=float(rng.uniform(*score_range)))
        for i in range(n)
    ]
    home = (square / 2.0, square / 2.0)
    inst = Instance(customers, horizon_days=horizon_days, max_daily_minutes=tmax,
                    name=name or f"rand-n{n}-s{seed}", home_xy=home)
    if classify and n >= 3:
        inst = classify_instance(inst, rng_seed=seed)
    if n_mandatory:
        inst = with_mandatory(inst, select_mandatory(inst, n_mandatory))
    return inst


@pytest.fixture
def four_node_instance():
    """3 customers plus home on a fixed asymmetric matrix."""
    times = [
        [0.0, 10.0, 20.0, 30.0],
        [12.0, 0.0, 7.0, 15.0],
        [18.0, 9.0, 0.0, 5.0],
        [28.0, 16.0, 6.0, 0.0],
    ]
    return manual_instance(times, services=[15.0, 10.0, 5.0], scores=[2.0, 3.0, 4.0],
                           horizon_days=2, tmax=120.0)
