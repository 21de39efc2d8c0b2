"""Exact costs of quantized policies on the original problems, plus analytic reference costs.

Exact costs use the original (not reduced) model. A quantized policy is a
step function, so every expectation reduces to Gaussian interval masses and
truncated moments. The only quadrature is the state integral in the Radner
cross term, whose integrand is an entire function of the state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .exceptions import InvalidParameter, TooLarge, UnsupportedVariance
from .finite import PolicyTable
from .gaussian import hermite_rule, interval_mass, truncated_moments_array
from .problems import RadnerParams, RelayParams, WitsenhausenParams
from .quantizer import quantize

RELAY_MAX_AGENTS = 8
RELAY_MAX_PIECES = 1024
RADNER_CROSS_NODES = 128

_SQRT2 = math.sqrt(2.0)


class ExtendedPolicy:
    """A policy table composed with the quantizers: one right-continuous step function per agent."""

    def __init__(self, table: PolicyTable, quantizers):
        quantizers = tuple(quantizers)
        if len(quantizers) != table.num_agents:
            raise InvalidParameter("need one quantizer per agent")
        for q, row in zip(quantizers, table.actions):
            if len(row) != q.num_symbols:
                raise InvalidParameter("table row length must equal the quantizer's symbol count")
        self.table = table
        self.quantizers = quantizers

    def __len__(self):
        return self.table.num_agents

    def __getitem__(self, agent):
        return lambda y: self.act(agent, y)

    def act(self, agent, y):
        idx, _ = quantize(self.quantizers[agent], np.asarray(y, dtype=float))
        return self.table.actions[agent][idx]

    def pieces(self, agent):
        """``(lo, hi, action)`` arrays covering the real line; overflow contributes both tails."""
        q = self.quantizers[agent]
        row = self.table.actions[agent]
        lo = np.r_[-np.inf, q.edges[:-1], q.radius]
        hi = np.r_[-q.radius, q.edges[1:], np.inf]
        act = np.r_[row[0], row[1:], row[0]]
        return lo, hi, act


def extend_policy(table: PolicyTable, quantizers) -> ExtendedPolicy:
    return ExtendedPolicy(table, quantizers)


def _transition(lo, hi, prev_actions):
    # P(y in [lo_b, hi_b)) for y ~ N(u_a, 1), as a matrix [a, b]
    u = np.asarray(prev_actions)[:, None]
    return interval_mass(lo[None, :] - u, hi[None, :] - u)


def eval_exact_witsenhausen(weight, policy: ExtendedPolicy) -> float:
    if not weight > 0:
        raise InvalidParameter("weight must be positive")
    lo1, hi1, u = policy.pieces(0)
    mass, m1, m2 = truncated_moments_array(lo1, hi1)
    term1 = weight * float(np.sum(u * u * mass - 2.0 * u * m1 + m2))
    lo2, hi2, v = policy.pieces(1)
    trans = _transition(lo2, hi2, u)
    term2 = float(mass @ (trans * (v[None, :] - u[:, None]) ** 2).sum(axis=1))
    return term1 + term2


def eval_exact_relay(weights, policy: ExtendedPolicy, state_std=1.0, noise_std=1.0) -> float:
    """Exact relay cost by forward recursion over the finitely many action values."""
    if state_std != 1.0 or noise_std != 1.0:
        raise UnsupportedVariance("exact relay evaluation assumes unit variances")
    n = len(policy)
    weights = [float(w) for w in weights]
    if len(weights) != n - 1:
        raise InvalidParameter(f"expected {n - 1} weights for {n} agents")
    if n > RELAY_MAX_AGENTS:
        raise TooLarge(f"exact relay evaluation supports at most {RELAY_MAX_AGENTS} agents")
    lo, hi, u = policy.pieces(0)
    if len(u) > RELAY_MAX_PIECES:
        raise TooLarge(f"more than {RELAY_MAX_PIECES} pieces for agent 1")
    # y1 = x + v0 ~ N(0, 2) and E[x | y1] = y1 / 2
    prob, m1, _ = truncated_moments_array(lo, hi, scale=_SQRT2)
    x_mass = 0.5 * m1
    penalty = 0.0
    for i in range(1, n):
        penalty += weights[i - 1] * float(prob @ (u * u))
        lo, hi, v = policy.pieces(i)
        if len(v) > RELAY_MAX_PIECES:
            raise TooLarge(f"more than {RELAY_MAX_PIECES} pieces for agent {i + 1}")
        trans = _transition(lo, hi, u)
        prob, x_mass, u = prob @ trans, x_mass @ trans, v
    second = float(prob @ (u * u))
    cross = float(x_mass @ u)
    return 1.0 - 2.0 * cross + second + penalty


def eval_exact_radner(r, policy: ExtendedPolicy, nodes=RADNER_CROSS_NODES) -> float:
    """Radner team cost; E[u1 u2] is a Gauss-Hermite integral over the state."""
    if not r > 0:
        raise InvalidParameter("r must be positive")
    x, w = hermite_rule(nodes)
    total = 1.0
    cond_means = []
    for agent in (0, 1):
        lo, hi, a = policy.pieces(agent)
        prob, m1, _ = truncated_moments_array(lo, hi, scale=_SQRT2)
        total += (1.0 + r) * float(prob @ (a * a)) - 2.0 * float(0.5 * m1 @ a)
        cond_means.append(interval_mass(lo[None, :] - x[:, None], hi[None, :] - x[:, None]) @ a)
    total += 2.0 * float(w @ (cond_means[0] * cond_means[1]))
    return total


def exact_cost(problem, policy: ExtendedPolicy):
    """Dispatch on the problem params; ``None`` when no exact evaluator applies."""
    params = problem.params
    if isinstance(params, WitsenhausenParams):
        return eval_exact_witsenhausen(params.weight, policy)
    if isinstance(params, RelayParams):
        try:
            return eval_exact_relay(params.weights, policy, params.state_std, params.noise_std)
        except TooLarge:
            return None
    if isinstance(params, RadnerParams):
        return eval_exact_radner(params.r, policy)
    return None


def _golden_section(fun, a, b, tol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def affine_cost_witsenhausen(weight, lam):
    """Cost of u1 = lam*y1 with the MMSE second stage u2 = E[u1 | y2]."""
    return weight * (lam - 1.0) ** 2 + lam * lam / (1.0 + lam * lam)


def affine_oracle_witsenhausen(weight, tol=1e-10):
    """Best linear first stage by golden-section search on [0, 1]; returns ``(lam, cost)``."""
    if not weight > 0:
        raise InvalidParameter("weight must be positive")
    lam, _ = _golden_section(lambda t: affine_cost_witsenhausen(weight, t), 0.0, 1.0, tol)
    candidates = [(affine_cost_witsenhausen(weight, t), t) for t in (0.0, lam, 1.0)]
    cost, lam = min(candidates)
    return lam, cost


def radner_linear_cost(r, alpha):
    """Cost of the symmetric linear policy u_i = alpha * y_i."""
    return (1.0 - 2.0 * alpha) ** 2 + (2.0 + 4.0 * r) * alpha * alpha


def radner_oracle(r):
    """Optimal symmetric linear gain and cost; returns ``(alpha, cost)``."""
    if not r > 0:
        raise InvalidParameter("r must be positive")
    alpha = 1.0 / (3.0 + 2.0 * r)
    return alpha, radner_linear_cost(r, alpha)


def reference_oracle(params):
    """Analytic reference cost for a problem, or ``None`` if there is none."""
    if isinstance(params, WitsenhausenParams):
        return affine_oracle_witsenhausen(params.weight)[1]
    if isinstance(params, RadnerParams):
        return radner_oracle(params.r)[1]
    return None


@dataclass
class CostReport:
    """One solved finite model and the cost of its extended policy."""

    step: int
    radius: float
    n: int
    m: float
    k: int
    finite_cost: float
    exact_cost: float | None
    mc_cost: float
    mc_half_ci95: float
    oracle: float | None = None
    gap: float | None = None
    model_gap: float | None = None
    sweeps: int = 0
    solver: str = "descent"
    termination: str = ""
    wall_ms: float | None = None

    def __post_init__(self):
        if self.exact_cost is not None:
            self.model_gap = abs(self.finite_cost - self.exact_cost)
            if self.oracle is not None:
                self.gap = self.exact_cost - self.oracle

    @property
    def mc_consistent(self):
        if self.exact_cost is None:
            return True
        return abs(self.mc_cost - self.exact_cost) <= 4.0 * self.mc_half_ci95

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidParameter(f"unknown report fields {sorted(unknown)}")
        return cls(**d)
