import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from teamquant.exceptions import InvalidParameter, NonFiniteCost, TooLarge
from teamquant.finite import (
    PolicyTable,
    build_finite,
    enumerate_policies,
    eval_finite_cost,
    eval_finite_cost_dense,
    local_costs,
    policy_from_dict,
    policy_space_size,
    policy_to_dict,
    quadrature_doubling_gap,
    quantizers_grids_from_dict,
    uniform_model,
)
from teamquant.problems import RadnerParams, RelayParams, WitsenhausenParams, make_problem
from teamquant.quantizer import make_action_grid, make_uniform_quantizer
from teamquant.solver import random_policy
from teamquant.team import static_reduce


def model(params, radius=2.0, n=4, m=1.0, k=5, nodes=32):
    return uniform_model(static_reduce(make_problem(params)), radius, n, m, k, quadrature_nodes=nodes)


PROBLEMS = [WitsenhausenParams(0.5), RelayParams(3, (0.1, 0.3)), RadnerParams(0.2)]


def test_witsenhausen_finite_cost_by_hand():
    # [DERIVED] direct double sum over representative levels, with the density
    # ratio taken from scipy's normal pdf rather than the package formula
    w = 0.5
    fm = model(WitsenhausenParams(w), radius=2.0, n=3, m=1.0, k=3)
    q = make_uniform_quantizer(2.0, 3)
    lev = np.r_[0.0, q.levels]
    p = np.r_[2 * norm.cdf(-2.0), np.diff(norm.cdf(q.edges))]
    u1 = np.array([0.0, -1.0, 0.0, 1.0])
    u2 = np.array([1.0, -1.0, 0.0, 0.0])
    ref = 0.0
    for i, j in itertools.product(range(4), range(4)):
        ratio = norm.pdf(lev[j] - u1[i]) / norm.pdf(lev[j])
        ref += p[i] * p[j] * (w * (u1[i] - lev[i]) ** 2 + (u2[j] - u1[i]) ** 2) * ratio
    assert eval_finite_cost(fm, PolicyTable((u1, u2))) == pytest.approx(ref, rel=1e-13)


def test_radner_finite_cost_by_hand():
    # [DERIVED] sum over state nodes and both symbols, written out directly
    r = 0.2
    fm = model(RadnerParams(r), radius=1.0, n=2, m=1.0, k=3, nodes=20)
    x, wx = np.polynomial.hermite_e.hermegauss(20)
    wx = wx / math.sqrt(2 * math.pi)
    lev = np.array([0.0, -0.5, 0.5])
    p = np.r_[2 * norm.cdf(-1.0), norm.cdf(0) - norm.cdf(-1), norm.cdf(1) - norm.cdf(0)]
    a = np.array([0.5, -1.0, 1.0])
    b = np.array([0.0, 0.0, 1.0])
    ref = 0.0
    for xi, wi in zip(x, wx):
        for i, j in itertools.product(range(3), range(3)):
            c = (xi - a[i] - b[j]) ** 2 + r * (a[i] ** 2 + b[j] ** 2)
            ratio = norm.pdf(lev[i] - xi) / norm.pdf(lev[i]) * norm.pdf(lev[j] - xi) / norm.pdf(lev[j])
            ref += wi * p[i] * p[j] * c * ratio
    assert eval_finite_cost(fm, PolicyTable((a, b))) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("params", PROBLEMS)
def test_einsum_matches_dense_sum(params):
    fm = model(params, radius=2.0, n=5, m=1.5, k=9)
    rng = np.random.default_rng(0)
    for _ in range(5):
        pol = random_policy(fm, rng)
        assert eval_finite_cost(fm, pol) == pytest.approx(eval_finite_cost_dense(fm, pol, chunk=37), rel=1e-12)


@pytest.mark.parametrize("params", PROBLEMS)
def test_masses_sum_to_one(params):
    fm = model(params, radius=3.0, n=16)
    for mass in fm.masses:
        assert abs(mass.sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("params", PROBLEMS)
@given(seed=st.integers(0, 2 ** 32 - 1), data=st.data())
def test_local_costs_are_additive(params, seed, data):
    fm = model(params, radius=2.0, n=3, m=1.0, k=5)
    rng = np.random.default_rng(seed)
    pol = random_policy(fm, rng)
    agent = data.draw(st.integers(0, fm.num_agents - 1))
    sym = data.draw(st.integers(0, fm.symbol_counts[agent] - 1))
    new = data.draw(st.sampled_from(list(fm.grids[agent].points)))
    cand = np.column_stack([pol.actions[agent], np.full(fm.symbol_counts[agent], new)])
    lc = local_costs(fm, pol, agent, cand)
    assert lc[:, 0].sum() == pytest.approx(eval_finite_cost(fm, pol), rel=1e-12)
    row = pol.actions[agent].copy()
    row[sym] = new
    changed = eval_finite_cost(fm, pol.with_row(agent, row))
    assert changed - eval_finite_cost(fm, pol) == pytest.approx(lc[sym, 1] - lc[sym, 0], abs=1e-12)


def test_local_costs_shape_check():
    fm = model(WitsenhausenParams())
    with pytest.raises(InvalidParameter):
        local_costs(fm, fm.zero_policy(), 0, np.zeros((3, 2)))


def test_policy_shape_check():
    fm = model(WitsenhausenParams())
    with pytest.raises(InvalidParameter):
        eval_finite_cost(fm, PolicyTable((np.zeros(5), np.zeros(4))))


def test_overflowing_density_is_a_nonfinite_cost():
    fm = model(WitsenhausenParams(), radius=80.0, n=4, m=60.0, k=3)
    pol = fm.constant_policy([60.0, 0.0])
    with pytest.raises(NonFiniteCost):
        eval_finite_cost(fm, pol)
    with pytest.raises(NonFiniteCost):
        eval_finite_cost_dense(fm, pol)


def test_zero_policy_snaps_to_grid():
    fm = model(WitsenhausenParams(), k=4)  # plain midpoint grids avoid 0 when k is even
    fm_plain = build_finite(fm.reduced, fm.quantizers, [make_action_grid(1.0, 4)] * 2)
    z = fm_plain.zero_policy()
    assert set(np.unique(z.actions[0])) <= set(fm_plain.grids[0].points)
    assert np.all(np.abs(z.actions[0]) == 0.25)


def test_enumeration_order_and_cap():
    fm = model(WitsenhausenParams(), radius=1.0, n=1, m=1.0, k=3)
    assert policy_space_size(fm) == 3 ** 4
    pols = list(enumerate_policies(fm))
    assert len(pols) == 81
    assert pols[0] == fm.constant_policy([-1, -1])
    assert pols[1].actions[1].tolist() == [-1.0, 0.0]
    with pytest.raises(TooLarge):
        enumerate_policies(fm, cap=80)


def test_build_finite_validation():
    red = static_reduce(make_problem(WitsenhausenParams()))
    q = make_uniform_quantizer(1, 2)
    g = make_action_grid(1, 3)
    with pytest.raises(InvalidParameter):
        build_finite(red, [q], [g, g])
    with pytest.raises(InvalidParameter):
        build_finite(red, [q, "q"], [g, g])
    with pytest.raises(InvalidParameter):
        build_finite(red, [q, q], [g, None])


def test_policy_dict_roundtrip():
    fm = model(RelayParams(3, (0.1, 0.1)), k=9)
    pol = random_policy(fm, np.random.default_rng(3))
    d = policy_to_dict(pol, fm)
    assert list(d["policy"]) == ["1", "2", "3"]
    assert policy_from_dict(d) == pol
    qs, gs = quantizers_grids_from_dict(d)
    assert qs == fm.quantizers
    assert all(np.array_equal(a.points, b.points) for a, b in zip(gs, fm.grids))
    with pytest.raises(InvalidParameter):
        policy_from_dict({"policy": {"1": [0.0], "3": [0.0]}})


def test_policy_table_is_immutable():
    pol = PolicyTable((np.zeros(3),))
    with pytest.raises(ValueError):
        pol.actions[0][0] = 1.0
    assert pol != PolicyTable((np.ones(3),))
    assert "PolicyTable" in repr(pol)


@pytest.mark.parametrize("params", [RelayParams(3, (0.1, 0.1)), RadnerParams(0.1)])
def test_quadrature_doubling_gap_small(params):
    # [DERIVED] self-consistency: 64 vs 128 state nodes agree at desk scale
    fm = model(params, radius=2.0, n=8, m=2.0, k=9, nodes=64)
    for seed in range(3):
        pi = random_policy(fm, np.random.default_rng(seed))
        assert quadrature_doubling_gap(fm, pi) < 1e-9


def test_quadrature_doubling_gap_without_state():
    fm = model(WitsenhausenParams(1.0))
    assert quadrature_doubling_gap(fm, fm.zero_policy()) == 0.0
