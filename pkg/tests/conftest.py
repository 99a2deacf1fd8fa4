"""Shared factories for small hand-built instances."""
import math

import pytest

from ucbench import Instance, Unit


def make_unit(uid="u1", **over):
    base = dict(
        id=uid, p_min=10.0, p_max=20.0, ramp_up=20.0, ramp_down=20.0,
        startup_ramp=20.0, shutdown_ramp=20.0, min_up=1, min_down=1,
        cost_fixed_on=5.0, cost_variable=2.0, startup_var_cost=100.0,
        startup_fixed_cost=10.0, heat_loss=math.log(2), pre_offline=0)
    base.update(over)
    return Unit(**base)


def make_instance(load, units=None, name="tiny", network=None, **unit_over):
    units = units if units is not None else [make_unit(**unit_over)]
    return Instance(name=name, horizon=len(load), load=list(load),
                    units=units, network=network)


@pytest.fixture
def unit():
    return make_unit()


@pytest.fixture
def two_unit_instance():
    u1 = make_unit("u1")
    u2 = make_unit("u2", p_min=5.0, p_max=30.0, cost_variable=3.0)
    return make_instance([12.0, 35.0, 20.0], units=[u1, u2])
