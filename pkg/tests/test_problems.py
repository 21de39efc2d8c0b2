import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamquant.exceptions import InvalidParameter, UnsupportedVariance
from teamquant.problems import (
    RadnerParams,
    RelayParams,
    WitsenhausenParams,
    make_problem,
    params_from_dict,
    problem_kind,
    params_to_dict,
)
from teamquant.team import STATE

vals = st.floats(-5, 5)


def _sum_terms(problem, x, ys, us):
    total = 0.0
    for t in problem.terms:
        total += t.fn(x if t.state else None, tuple(ys[a] for a in t.agents), tuple(us[a] for a in t.agents))
    return total


@given(st.lists(vals, min_size=7, max_size=7))
def test_terms_sum_to_cost(v):
    x, ys, us = v[0], tuple(v[1:4]), tuple(v[4:7])
    for params in (WitsenhausenParams(0.3), RelayParams(3, (0.2, 0.0)), RadnerParams(0.4)):
        p = make_problem(params)
        n = p.num_agents
        xv = x if p.state_dim else None
        assert _sum_terms(p, xv, ys[:n], us[:n]) == pytest.approx(p.cost(xv, ys[:n], us[:n]), rel=1e-10, abs=1e-10)


@given(st.lists(vals, min_size=4, max_size=4))
def test_witsenhausen_cost_form(v):
    # [PAPER] cost = weight * (u1 - y1)^2 + (u2 - u1)^2
    y1, y2, u1, u2 = v
    p = make_problem(WitsenhausenParams(0.25))
    assert p.cost(None, (y1, y2), (u1, u2)) == pytest.approx(0.25 * (u1 - y1) ** 2 + (u2 - u1) ** 2)


@given(st.lists(vals, min_size=5, max_size=5))
def test_relay_cost_form(v):
    # [PAPER] cost = (last action - x)^2 + weighted squared actions of the relays
    x, u1, u2, u3, _ = v
    p = make_problem(RelayParams(3, (0.1, 0.2)))
    assert p.cost(x, (0, 0, 0), (u1, u2, u3)) == pytest.approx((u3 - x) ** 2 + 0.1 * u1 ** 2 + 0.2 * u2 ** 2)


@given(st.lists(vals, min_size=3, max_size=3))
def test_radner_cost_form(v):
    x, u1, u2 = v
    p = make_problem(RadnerParams(0.1))
    expected = (x - u1 - u2) ** 2 + 0.1 * (u1 ** 2 + u2 ** 2)
    assert p.cost(x, (0, 0), (u1, u2)) == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_information_structures():
    w = make_problem(WitsenhausenParams())
    assert [k.parent for k in w.kernels] == [None, 0] and w.state_dim == 0
    r = make_problem(RelayParams(4, (0.1, 0.1, 0.1)))
    assert [k.parent for k in r.kernels] == [STATE, 0, 1, 2] and r.state_dim == 1
    s = make_problem(RadnerParams())
    assert [k.parent for k in s.kernels] == [STATE, STATE] and s.is_static


def test_params_validation():
    with pytest.raises(InvalidParameter):
        WitsenhausenParams(0.0)
    with pytest.raises(InvalidParameter):
        RelayParams(3, (0.1,))
    with pytest.raises(InvalidParameter):
        RelayParams(3, (0.1, -1.0))
    with pytest.raises(InvalidParameter):
        RelayParams(1, ())
    with pytest.raises(UnsupportedVariance):
        RelayParams(2, (0.1,), noise_std=2.0)
    with pytest.raises(InvalidParameter):
        RadnerParams(-0.1)
    with pytest.raises(InvalidParameter):
        make_problem("witsenhausen")


@pytest.mark.parametrize("params", [WitsenhausenParams(0.1), RelayParams(4, (0.1, 0.2, 0.3)), RadnerParams(0.5)])
def test_params_dict_roundtrip(params):
    d = params_to_dict(params)
    assert d["kind"] == problem_kind(params)
    assert params_from_dict(d) == params


def test_params_from_dict_errors():
    with pytest.raises(InvalidParameter):
        params_from_dict({"kind": "nope"})
    with pytest.raises(InvalidParameter):
        params_from_dict({"kind": "radner", "weight": 1})
