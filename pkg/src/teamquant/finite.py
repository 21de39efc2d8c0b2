"""Finite team models built by quantizing every agent's reduced observation.

The finite cost is a weighted sum of the reduced cost over all tuples of
representative observation levels (plus a Gauss-Hermite integral over the
state when there is one). It is evaluated as a tensor network: one factor
per agent carrying its symbol masses and density ratios, and one table per
additive cost term. ``np.einsum`` contracts each term against the factors,
so the work follows the problem's dependency chain instead of the full
tuple product. ``eval_finite_cost_dense`` sums the reduced cost over the
full product directly and serves as an independent check.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .exceptions import DensityOverflow, InvalidParameter, NonFiniteCost, TooLarge
from .gaussian import hermite_rule
from .quantizer import (
    ActionGrid,
    Quantizer,
    cell_masses,
    make_action_grid,
    make_uniform_quantizer,
    nearest_grid_point,
)
from .team import STATE, ReducedTeam, gaussian_density_factor

DEFAULT_QUADRATURE_NODES = 64
DEFAULT_ENUMERATION_CAP = 10 ** 7
DENSE_CHUNK = 10 ** 6

_STATE_AX = "X"
_CAND_AX = "K"


def _letter(agent):
    return string.ascii_lowercase[agent]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Per-agent action arrays indexed by observation symbol (overflow symbol first)."""

    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(_readonly(a) for a in self.actions))

    @property
    def num_agents(self):
        return len(self.actions)

    @property
    def shape(self):
        return tuple(len(a) for a in self.actions)

    def with_row(self, agent, row):
        rows = list(self.actions)
        rows[agent] = row
        return PolicyTable(tuple(rows))

    def __eq__(self, other):
        return (
            isinstance(other, PolicyTable)
            and self.shape == other.shape
            and all(np.array_equal(a, b) for a, b in zip(self.actions, other.actions))
        )

    def __repr__(self):
        return f"PolicyTable({[a.tolist() for a in self.actions]})"


@dataclass(frozen=True, eq=False)
class FiniteTeamModel:
    reduced: ReducedTeam
    quantizers: tuple
    grids: tuple
    levels: tuple = field(repr=False)
    masses: tuple = field(repr=False)
    state_nodes: np.ndarray | None = field(default=None, repr=False)
    state_weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_agents(self):
        return len(self.levels)

    @property
    def symbol_counts(self):
        return tuple(len(v) for v in self.levels)

    @property
    def has_state(self):
        return self.state_nodes is not None

    def check_policy(self, policy: PolicyTable):
        if policy.shape != self.symbol_counts:
            raise InvalidParameter(
                f"policy shape {policy.shape} does not match model symbols {self.symbol_counts}"
            )

    def zero_policy(self):
        """All-zero table snapped to each agent's grid."""
        return PolicyTable(
            tuple(np.full(n, nearest_grid_point(g, 0.0)) for n, g in zip(self.symbol_counts, self.grids))
        )

    def constant_policy(self, values):
        return PolicyTable(tuple(np.full(n, float(v)) for n, v in zip(self.symbol_counts, values)))


def build_finite(reduced: ReducedTeam, quantizers, grids, quadrature_nodes=DEFAULT_QUADRATURE_NODES):
    quantizers = tuple(quantizers)
    grids = tuple(grids)
    n = reduced.num_agents
    if len(quantizers) != n or len(grids) != n:
        raise InvalidParameter(f"need one quantizer and one action grid per agent ({n})")
    if not all(isinstance(q, Quantizer) for q in quantizers):
        raise InvalidParameter("quantizers must be Quantizer instances")
    if not all(isinstance(g, ActionGrid) for g in grids):
        raise InvalidParameter("grids must be ActionGrid instances")
    levels = tuple(_readonly(q.symbol_levels) for q in quantizers)
    masses = tuple(_readonly(cell_masses(q, 1.0)) for q in quantizers)
    nodes = weights = None
    if reduced.problem.state_dim:
        nodes, weights = hermite_rule(quadrature_nodes)
        nodes, weights = _readonly(nodes), _readonly(weights)
    return FiniteTeamModel(reduced, quantizers, grids, levels, masses, nodes, weights)


def uniform_model(reduced: ReducedTeam, radius, n, half_width, k, nested=True,
                  quadrature_nodes=DEFAULT_QUADRATURE_NODES):
    """Same quantizer and action grid for every agent."""
    q = make_uniform_quantizer(radius, n)
    g = make_action_grid(half_width, k, nested=nested)
    m = reduced.num_agents
    return build_finite(reduced, [q] * m, [g] * m, quadrature_nodes)


@lru_cache(maxsize=4096)
def _path(subscripts, shapes):
    return np.einsum_path(subscripts, *[np.empty(s) for s in shapes], optimize="greedy")[0]


def _einsum(subscripts, *ops):
    return np.einsum(subscripts, *ops, optimize=_path(subscripts, tuple(o.shape for o in ops)))


def _factor_operands(fm: FiniteTeamModel, actions, br=None, cand=None):
    ops, subs = [], []
    if fm.has_state:
        ops.append(fm.state_weights)
        subs.append(_STATE_AX)
    for j, kernel in enumerate(fm.reduced.kernels):
        p, mass, y = kernel.parent, fm.masses[j], fm.levels[j]
        if p is None:
            ops.append(mass)
            subs.append(_letter(j))
        elif p == STATE:
            ops.append(mass[None, :] * gaussian_density_factor(fm.state_nodes[:, None], y[None, :]))
            subs.append(_STATE_AX + _letter(j))
        elif p == br:
            ops.append(mass[None, None, :] * gaussian_density_factor(cand[:, :, None], y[None, None, :]))
            subs.append(_letter(p) + _CAND_AX + _letter(j))
        else:
            ops.append(mass[None, :] * gaussian_density_factor(actions[p][:, None], y[None, :]))
            subs.append(_letter(p) + _letter(j))
    return ops, subs


def _term_operand(fm: FiniteTeamModel, term, actions, br=None, cand=None):
    axes = ([_STATE_AX] if term.state else []) + [_letter(a) for a in term.agents]
    if br is not None and br in term.agents:
        axes.append(_CAND_AX)
    ndim = len(axes)

    def place(arr, *names):
        shape = [1] * ndim
        for name, size in zip(names, arr.shape):
            shape[axes.index(name)] = size
        return arr.reshape(shape)

    x = place(fm.state_nodes, _STATE_AX) if term.state else None
    ys = tuple(place(fm.levels[a], _letter(a)) for a in term.agents)
    us = tuple(
        place(cand, _letter(a), _CAND_AX) if a == br else place(actions[a], _letter(a))
        for a in term.agents
    )
    val = np.asarray(term.fn(x, ys, us), dtype=float)
    sizes = []
    for name in axes:
        if name == _STATE_AX:
            sizes.append(len(fm.state_nodes))
        elif name == _CAND_AX:
            sizes.append(cand.shape[1])
        else:
            sizes.append(len(fm.levels[string.ascii_lowercase.index(name)]))
    return np.broadcast_to(val, tuple(sizes)), "".join(axes)


def _contract(fm: FiniteTeamModel, actions, br=None, cand=None):
    try:
        ops, subs = _factor_operands(fm, actions, br, cand)
        total = 0.0
        for term in fm.reduced.problem.terms:
            table, tsub = _term_operand(fm, term, actions, br, cand)
            all_subs = subs + [tsub]
            if br is None:
                out = ""
            else:
                out = _letter(br) + (_CAND_AX if any(_CAND_AX in s for s in all_subs) else "")
            val = _einsum(",".join(all_subs) + "->" + out, *ops, table)
            if br is not None and _CAND_AX not in out:
                val = np.broadcast_to(val[:, None], (len(fm.levels[br]), cand.shape[1]))
            total = total + val
    except DensityOverflow as exc:
        raise NonFiniteCost(f"reduced cost overflows at a representative tuple: {exc}") from exc
    if not np.all(np.isfinite(total)):
        raise NonFiniteCost("finite-model cost is not finite")
    return total


def eval_finite_cost(fm: FiniteTeamModel, policy: PolicyTable) -> float:
    """Exact finite-model cost of a policy table."""
    fm.check_policy(policy)
    return float(_contract(fm, policy.actions))


def quadrature_doubling_gap(fm: FiniteTeamModel, policy: PolicyTable) -> float:
    """Change in the finite cost when the state quadrature uses twice as many nodes.

    Zero for models without a continuous state.
    """
    fm.check_policy(policy)
    if not fm.has_state:
        return 0.0
    nodes, weights = hermite_rule(2 * len(fm.state_nodes))
    finer = replace(fm, state_nodes=_readonly(nodes), state_weights=_readonly(weights))
    return abs(float(_contract(finer, policy.actions)) - float(_contract(fm, policy.actions)))


def local_costs(fm: FiniteTeamModel, policy: PolicyTable, agent: int, candidates) -> np.ndarray:
    """Contribution of each of ``agent``'s symbols to the finite cost.

    ``candidates`` is ``(num_symbols, K)``: entry ``[s, k]`` is an action
    tried at symbol ``s`` with every other table entry held fixed. The cost
    is additive over the agent's symbols, so replacing symbol ``s``'s action
    by ``candidates[s, k]`` changes the total by ``out[s, k] - out[s, current]``.
    """
    fm.check_policy(policy)
    cand = np.asarray(candidates, dtype=float)
    if cand.ndim != 2 or cand.shape[0] != fm.symbol_counts[agent]:
        raise InvalidParameter("candidates must have shape (num_symbols, K)")
    return np.asarray(_contract(fm, policy.actions, br=agent, cand=cand))


def eval_finite_cost_dense(fm: FiniteTeamModel, policy: PolicyTable, chunk=DENSE_CHUNK) -> float:
    """Direct sum of the reduced cost over every symbol tuple, streamed in chunks."""
    fm.check_policy(policy)
    reduced = fm.reduced
    counts = fm.symbol_counts
    ntuples = math.prod(counts)
    if fm.has_state:
        xs = list(zip(fm.state_nodes, fm.state_weights))
    else:
        xs = [(None, 1.0)]
    total = 0.0
    for start in range(0, ntuples, chunk):
        flat = np.arange(start, min(start + chunk, ntuples))
        idx = np.unravel_index(flat, counts)
        ys = tuple(fm.levels[i][idx[i]] for i in range(len(counts)))
        us = tuple(policy.actions[i][idx[i]] for i in range(len(counts)))
        w = np.prod([fm.masses[i][idx[i]] for i in range(len(counts))], axis=0)
        for x, wx in xs:
            try:
                c = reduced.reduced_cost(x, ys, us)
            except DensityOverflow as exc:
                raise NonFiniteCost(str(exc)) from exc
            total += wx * float(np.dot(c, w))
    if not math.isfinite(total):
        raise NonFiniteCost("finite-model cost is not finite")
    return total


def policy_space_size(fm: FiniteTeamModel, agents=None) -> int:
    agents = range(fm.num_agents) if agents is None else agents
    return math.prod(fm.grids[i].size ** fm.symbol_counts[i] for i in agents)


def enumerate_policies(fm: FiniteTeamModel, cap=DEFAULT_ENUMERATION_CAP):
    """Every grid-restricted policy table, in lexicographic order of grid indices."""
    count = policy_space_size(fm)
    if count > cap:
        raise TooLarge(f"{count} policies exceed the enumeration cap {cap}")
    return _enumerate(fm)


def _enumerate(fm):
    counts = fm.symbol_counts
    choices = [fm.grids[i].points for i in range(fm.num_agents) for _ in range(counts[i])]
    splits = np.cumsum(counts)[:-1]
    for combo in itertools.product(*choices):
        rows = np.split(np.array(combo, dtype=float), splits)
        yield PolicyTable(tuple(rows))


def policy_to_dict(policy: PolicyTable, fm: FiniteTeamModel | None = None) -> dict:
    """JSON-ready form; agent keys are 1-based strings."""
    d = {"policy": {str(i + 1): [float(v) for v in a] for i, a in enumerate(policy.actions)}}
    if fm is not None:
        d["quantizers"] = [{"radius": q.radius, "n": q.n} for q in fm.quantizers]
        d["grids"] = [{"half_width": g.half_width, "k": g.size, "nested": g.nested} for g in fm.grids]
    return d


def policy_from_dict(d: dict) -> PolicyTable:
    rows = d["policy"]
    keys = sorted(rows, key=int)
    if keys != [str(i + 1) for i in range(len(keys))]:
        raise InvalidParameter("policy agents must be numbered 1..N")
    return PolicyTable(tuple(np.array(rows[k], dtype=float) for k in keys))


def quantizers_grids_from_dict(d: dict):
    qs = tuple(make_uniform_quantizer(q["radius"], q["n"]) for q in d["quantizers"])
    gs = tuple(make_action_grid(g["half_width"], g["k"], nested=g["nested"]) for g in d["grids"])
    return qs, gs
