"""Person-by-person descent and exhaustive search over finite policy tables."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import InvalidParameter, TooLarge
from .finite import (
    DEFAULT_ENUMERATION_CAP,
    FiniteTeamModel,
    PolicyTable,
    eval_finite_cost,
    local_costs,
    policy_space_size,
)
from .gaussian import make_rng, spawn_seeds

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 500


class Termination(str, Enum):
    CONVERGED = "converged"
    MAX_SWEEPS = "max_sweeps"
    STALLED = "stalled"


@dataclass
class SolveTrace:
    """Finite cost before the first sweep and after each full sweep."""

    costs: list = field(default_factory=list)
    termination: Termination = Termination.CONVERGED
    start: int = 0

    @property
    def sweeps(self):
        return len(self.costs) - 1

    @property
    def final_cost(self):
        return self.costs[-1]


def _grid_candidates(fm, agent, current):
    pts = fm.grids[agent].points
    n = fm.symbol_counts[agent]
    # last column is the incumbent action, so off-grid entries are only
    # replaced by something strictly better
    return np.concatenate([np.broadcast_to(pts, (n, len(pts))), current[:, None]], axis=1)


def best_response(fm: FiniteTeamModel, policy: PolicyTable, agent: int) -> PolicyTable:
    """Replace one agent's row by its per-symbol best grid action.

    Ties between grid points go to the smaller action; the current action
    is kept unless some grid point is strictly better.
    """
    if not 0 <= agent < fm.num_agents:
        raise InvalidParameter(f"agent index {agent} out of range")
    current = policy.actions[agent]
    costs = local_costs(fm, policy, agent, _grid_candidates(fm, agent, current))
    grid_costs, incumbent = costs[:, :-1], costs[:, -1]
    j = np.argmin(grid_costs, axis=1)
    best = grid_costs[np.arange(len(j)), j]
    row = np.where(best < incumbent, fm.grids[agent].points[j], current)
    if np.array_equal(row, current):
        return policy
    return policy.with_row(agent, row)


def pbp_solve(fm: FiniteTeamModel, init: PolicyTable, max_sweeps=DEFAULT_MAX_SWEEPS,
              tol=DEFAULT_TOL, start=0):
    """Cyclic best responses over agents 1..N until a sweep gains less than ``tol``."""
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    if int(max_sweeps) != max_sweeps or max_sweeps < 1:
        raise InvalidParameter("max_sweeps must be a positive integer")
    policy = init
    cost = eval_finite_cost(fm, policy)
    trace = SolveTrace(costs=[cost], termination=Termination.MAX_SWEEPS, start=start)
    for _ in range(int(max_sweeps)):
        before = policy
        for agent in range(fm.num_agents):
            policy = best_response(fm, policy, agent)
        new_cost = eval_finite_cost(fm, policy)
        trace.costs.append(new_cost)
        if cost - new_cost < tol:
            trace.termination = Termination.CONVERGED if policy == before else Termination.STALLED
            break
        cost = new_cost
    return policy, trace


def random_policy(fm: FiniteTeamModel, rng) -> PolicyTable:
    return PolicyTable(tuple(rng.choice(g.points, size=n) for g, n in zip(fm.grids, fm.symbol_counts)))


def multi_start_solve(fm: FiniteTeamModel, starts, seed, max_sweeps=DEFAULT_MAX_SWEEPS,
                      tol=DEFAULT_TOL, threads=1, extra_inits=()):
    """Best of ``pbp_solve`` runs from the snapped zero table, any ``extra_inits``,
    and ``starts`` seeded random grid tables.

    Returns ``(policy, traces)``; cost ties go to the earliest start.
    """
    if int(starts) != starts or starts < 1:
        raise InvalidParameter("starts must be a positive integer")
    inits = [fm.zero_policy(), *extra_inits]
    inits += [random_policy(fm, make_rng(s)) for s in spawn_seeds(seed, int(starts))]

    def run(job):
        idx, init = job
        return pbp_solve(fm, init, max_sweeps=max_sweeps, tol=tol, start=idx)

    jobs = list(enumerate(inits))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    best = min(range(len(results)), key=lambda i: (results[i][1].final_cost, i))
    return results[best][0], [trace for _, trace in results]


def exhaustive_solve(fm: FiniteTeamModel, cap=DEFAULT_ENUMERATION_CAP):
    """Global minimum of the finite cost over grid-restricted tables.

    Tables of agents ``1..N-1`` are enumerated in lexicographic order; for
    each, the last agent's optimal row is exact because the cost separates
    over its symbols. Returns the lexicographically first minimizer and its
    cost.
    """
    last = fm.num_agents - 1
    outer = policy_space_size(fm, range(last))
    if outer > cap:
        raise TooLarge(f"{outer} partial tables exceed the enumeration cap {cap}")
    counts = fm.symbol_counts
    pts_last = fm.grids[last].points
    cand = np.broadcast_to(pts_last, (counts[last], len(pts_last)))
    choices = [fm.grids[i].points for i in range(last) for _ in range(counts[i])]
    splits = np.cumsum(counts[:last])[:-1] if last else []
    placeholder = np.full(counts[last], pts_last[0])
    best_cost, best_policy = np.inf, None
    for combo in itertools.product(*choices):
        rows = tuple(np.split(np.array(combo, dtype=float), splits)) if last else ()
        policy = PolicyTable(rows + (placeholder,))
        costs = local_costs(fm, policy, last, cand)
        j = np.argmin(costs, axis=1)
        total = float(costs[np.arange(len(j)), j].sum())
        if total < best_cost:
            best_cost = total
            best_policy = policy.with_row(last, pts_last[j])
    return best_policy, eval_finite_cost(fm, best_policy)
