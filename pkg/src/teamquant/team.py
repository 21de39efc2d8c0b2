"""Sequential team problems, their static reduction, and Monte Carlo costs.

A problem is described by a chain of observation kernels. Agent ``i`` sees
``y_i = parent + noise`` where the parent is the state ``x`` (``STATE``),
an earlier agent's action (an agent index), or nothing (``None``: an
exogenous N(0, 1) observation). The static reduction rewrites every
unit-variance Gaussian kernel as a density ratio against N(0, 1), which
turns the observations into independent standard normals and moves the
dependence on earlier actions into the cost.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .exceptions import DensityOverflow, InvalidParameter, NonFiniteCost, UnsupportedKernel
from .gaussian import make_rng, spawn_seeds

STATE = "x"

_MAX_EXPONENT = math.log(np.finfo(float).max)

# Samples per Monte Carlo chunk. Chunk boundaries, not worker count, decide
# which random stream each sample comes from.
MC_CHUNK = 1 << 16


def gaussian_density_factor(u, y):
    """exp(-(u**2 - 2*y*u) / 2), the ratio of the N(u, 1) and N(0, 1) densities at ``y``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    expo = -0.5 * (u * u - 2.0 * y * u)
    if np.any(expo > _MAX_EXPONENT):
        raise DensityOverflow(
            f"density-ratio exponent {float(np.max(expo)):.4g} exceeds the float64 range"
        )
    out = np.exp(expo)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ObservationKernel:
    """Observation ``y = parent + noise_std * N(0, 1)``.

    ``sampler`` replaces the Gaussian description entirely; such a kernel
    can be simulated but not statically reduced.
    """

    parent: Any = None
    noise_std: float = 1.0
    sampler: Callable | None = None

    @property
    def is_gaussian(self):
        return self.sampler is None

    def sample(self, rng, parent_value, size):
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, parent_value, size), dtype=float)
        noise = self.noise_std * rng.standard_normal(size)
        return noise if parent_value is None else parent_value + noise


@dataclass(frozen=True)
class CostTerm:
    """One additive piece of a cost.

    ``fn(x, ys, us)`` receives the state (or ``None`` when ``state`` is
    false) and tuples of observations and actions for ``agents`` only, all
    broadcast against each other.
    """

    fn: Callable
    agents: tuple = ()
    state: bool = False


@dataclass(frozen=True, eq=False)
class TeamProblem:
    """A sequential team in intrinsic form with a scalar state and scalar observations.

    ``cost(x, ys, us)`` must equal the sum of ``terms``; the finite model
    uses the terms, the Monte Carlo evaluators use ``cost``.
    """

    name: str
    kernels: tuple
    cost: Callable
    terms: tuple
    state_dim: int = 0
    params: Any = None

    def __post_init__(self):
        if self.state_dim not in (0, 1):
            raise InvalidParameter("only scalar or absent states are supported")
        for i, k in enumerate(self.kernels):
            p = k.parent
            if p == STATE and self.state_dim == 0:
                raise InvalidParameter(f"agent {i} observes a state but state_dim is 0")
            if isinstance(p, (int, np.integer)) and not 0 <= p < i:
                raise InvalidParameter(f"agent {i} may only observe actions of earlier agents")

    @property
    def num_agents(self):
        return len(self.kernels)

    @property
    def is_static(self):
        return all(k.parent is None or k.parent == STATE for k in self.kernels)

    def sample_state(self, rng, size):
        return rng.standard_normal(size) if self.state_dim else None


def _parent_value(parent, x, us):
    if parent is None:
        return None
    if parent == STATE:
        return x
    return us[parent]


@dataclass(frozen=True, eq=False)
class ReducedTeam:
    """Static reduction: independent N(0, 1) observations and a reweighted cost."""

    problem: TeamProblem

    @property
    def num_agents(self):
        return self.problem.num_agents

    @property
    def kernels(self):
        return self.problem.kernels

    def density_factor(self, i, x, us, y):
        parent = self.kernels[i].parent
        if parent is None:
            return np.ones_like(np.asarray(y, dtype=float))
        return gaussian_density_factor(_parent_value(parent, x, us), y)

    def density_product(self, x, ys, us):
        out = 1.0
        for i in range(self.num_agents):
            out = out * self.density_factor(i, x, us, ys[i])
        return out

    def reduced_cost(self, x, ys, us):
        return self.problem.cost(x, ys, us) * self.density_product(x, ys, us)


def static_reduce(problem: TeamProblem) -> ReducedTeam:
    for i, k in enumerate(problem.kernels):
        if not k.is_gaussian:
            raise UnsupportedKernel(f"agent {i}: kernel has no Gaussian description")
        if k.noise_std != 1.0:
            raise UnsupportedKernel(
                f"agent {i}: conditional std {k.noise_std} != 1; rescale coordinates first"
            )
    return ReducedTeam(problem)


def _as_actions(g, y):
    return np.broadcast_to(np.asarray(g(y), dtype=float), np.shape(y))


def _combine(stats):
    """Chan's pairwise merge of (count, mean, M2) triples, in the given order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _run_chunks(chunk_fn, samples, seed, threads):
    if int(samples) != samples or samples < 2:
        raise InvalidParameter("samples must be an integer >= 2")
    samples = int(samples)
    nchunks = -(-samples // MC_CHUNK)
    sizes = [MC_CHUNK] * (nchunks - 1) + [samples - MC_CHUNK * (nchunks - 1)]
    seeds = spawn_seeds(seed, nchunks)

    def one(args):
        s, size = args
        c = chunk_fn(make_rng(s), size)
        if not np.all(np.isfinite(c)):
            raise NonFiniteCost("a sampled cost is not finite")
        return size, float(np.mean(c)), float(np.sum((c - np.mean(c)) ** 2))

    jobs = list(zip(seeds, sizes))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(one, jobs))
    else:
        stats = [one(j) for j in jobs]
    n, mean, m2 = _combine(stats)
    std = math.sqrt(m2 / (n - 1))
    return mean, 1.96 * std / math.sqrt(n)


def eval_cost_dynamic_mc(problem: TeamProblem, policy: Sequence[Callable], samples, seed, threads=1):
    """Forward-simulate the team and average its cost; returns ``(mean, half_ci95)``."""

    def chunk(rng, size):
        x = problem.sample_state(rng, size)
        ys, us = [], []
        for i, k in enumerate(problem.kernels):
            y = k.sample(rng, _parent_value(k.parent, x, us), size)
            ys.append(y)
            us.append(_as_actions(policy[i], y))
        return problem.cost(x, tuple(ys), tuple(us))

    return _run_chunks(chunk, samples, seed, threads)


def eval_cost_reduced_mc(reduced: ReducedTeam, policy: Sequence[Callable], samples, seed, threads=1):
    """Average the reduced cost over independent N(0, 1) state and observations."""
    problem = reduced.problem

    def chunk(rng, size):
        x = problem.sample_state(rng, size)
        ys = rng.standard_normal((problem.num_agents, size))
        us = tuple(_as_actions(policy[i], ys[i]) for i in range(problem.num_agents))
        return reduced.reduced_cost(x, tuple(ys), us)

    return _run_chunks(chunk, samples, seed, threads)
