"""scikit-learn style wrappers around the quantizer and the finite-model solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .evaluator import exact_cost, extend_policy
from .exceptions import InvalidParameter
from .experiments import SolverSettings, solve_step
from .finite import DEFAULT_QUADRATURE_NODES, eval_finite_cost, uniform_model
from .problems import make_problem
from .quantizer import make_uniform_quantizer, quantize
from .solver import DEFAULT_MAX_SWEEPS, DEFAULT_TOL
from .team import TeamProblem, static_reduce


def _as_problem(problem):
    if isinstance(problem, TeamProblem):
        return problem
    try:
        return make_problem(problem)
    except InvalidParameter:
        raise TypeError(f"expected a TeamProblem or a problem params, got {type(problem).__name__}") from None


class UniformQuantizer(TransformerMixin, BaseEstimator):
    """Map each feature to its uniform-quantizer symbol.

    Symbol 0 is the overflow symbol (``|y| >= radius``); symbols
    ``1..n_levels`` are the granular cells from left to right.

    Parameters
    ----------
    radius : float
        Half-width of the granular region.
    n_levels : int
        Number of granular cells.
    """

    def __init__(self, radius=1.0, n_levels=8):
        self.radius = radius
        self.n_levels = n_levels

    def fit(self, X, y=None):
        X = check_array(X, ensure_all_finite=False)
        self.quantizer_ = make_uniform_quantizer(self.radius, self.n_levels)
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_is_fitted(self, "quantizer_")
        X = check_array(X, ensure_all_finite=False)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        if np.isnan(X).any():
            raise ValueError("X contains NaN")
        return X

    def transform(self, X):
        X = self._check(X)
        return quantize(self.quantizer_, X)[0]

    def reconstruct(self, X):
        """Representative level of each entry's cell (0 for overflow)."""
        X = self._check(X)
        return quantize(self.quantizer_, X)[1]

    def inverse_transform(self, X):
        check_is_fitted(self, "quantizer_")
        idx = check_array(X, dtype=None)
        if not np.issubdtype(idx.dtype, np.integer):
            if not np.all(idx == np.round(idx)):
                raise ValueError("symbols must be integers")
            idx = idx.astype(np.int64)
        if idx.min(initial=0) < 0 or idx.max(initial=0) >= self.quantizer_.num_symbols:
            raise ValueError("symbol out of range")
        return self.quantizer_.symbol_levels[idx]


class QuantizedTeamSolver(BaseEstimator):
    """Quantize a team problem uniformly and solve the finite model.

    ``fit`` takes a problem (a ``TeamProblem`` or one of the problem parameter sets)
    in place of a data matrix. The fitted policy acts on observation
    matrices of shape ``(n_samples, n_agents)``.

    Parameters
    ----------
    radius, n_levels : float, int
        Observation quantizer: granular half-width and number of cells.
    action_half_width, n_actions : float, int
        Action grid on ``[-action_half_width, action_half_width]``.
    nested : bool
        Use the nested (dyadic) action grid.
    method : {"descent", "exhaustive", "auto"}
    starts : int
        Random restarts for descent.
    random_state : int or None
        Seed for the restarts.
    n_jobs : int
        Worker threads for the restarts.

    Attributes
    ----------
    model_ : FiniteTeamModel
    policy_ : PolicyTable
    finite_cost_ : float
    termination_ : str
    """

    def __init__(self, radius=4.0, n_levels=32, action_half_width=2.0, n_actions=33, nested=True,
                 method="descent", starts=16, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL,
                 quadrature_nodes=DEFAULT_QUADRATURE_NODES, exhaustive_cap=100_000,
                 random_state=0, n_jobs=1):
        self.radius = radius
        self.n_levels = n_levels
        self.action_half_width = action_half_width
        self.n_actions = n_actions
        self.nested = nested
        self.method = method
        self.starts = starts
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.quadrature_nodes = quadrature_nodes
        self.exhaustive_cap = exhaustive_cap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        problem = _as_problem(X)
        settings = SolverSettings(
            method=self.method, starts=self.starts, tol=self.tol, max_sweeps=self.max_sweeps,
            exhaustive_cap=self.exhaustive_cap, threads=self.n_jobs,
        )
        fm = uniform_model(static_reduce(problem), self.radius, self.n_levels,
                           self.action_half_width, self.n_actions, nested=self.nested,
                           quadrature_nodes=self.quadrature_nodes)
        seed = np.random.SeedSequence(self.random_state)
        policy, sweeps, solver, termination = solve_step(fm, settings, seed, None)
        self.problem_ = problem
        self.model_ = fm
        self.quantizers_ = fm.quantizers
        self.grids_ = fm.grids
        self.policy_ = policy
        self.extended_policy_ = extend_policy(policy, fm.quantizers)
        self.finite_cost_ = eval_finite_cost(fm, policy)
        self.n_sweeps_ = sweeps
        self.solver_ = solver
        self.termination_ = termination
        self.n_features_in_ = problem.num_agents
        return self

    def _observations(self, Y):
        check_is_fitted(self, "policy_")
        Y = check_array(Y)
        if Y.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} observation columns, got {Y.shape[1]}")
        return Y

    def transform(self, Y):
        """Symbol index of each agent's observation."""
        Y = self._observations(Y)
        return np.column_stack([quantize(q, Y[:, i])[0] for i, q in enumerate(self.quantizers_)])

    def predict(self, Y):
        """Each agent's action for its observation."""
        Y = self._observations(Y)
        return np.column_stack([self.extended_policy_.act(i, Y[:, i]) for i in range(Y.shape[1])])

    def exact_cost(self, problem=None):
        check_is_fitted(self, "policy_")
        problem = self.problem_ if problem is None else _as_problem(problem)
        return exact_cost(problem, self.extended_policy_)

    def score(self, X=None, y=None):
        """Negative exact team cost of the fitted policy (higher is better)."""
        cost = self.exact_cost(X)
        if cost is None:
            raise ValueError("no exact evaluator for this problem")
        return -cost
