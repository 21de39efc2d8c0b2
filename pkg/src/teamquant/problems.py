"""Problem factories: Witsenhausen's counterexample, the Gaussian relay chain,
and a two-agent static quadratic team with a known linear optimum."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .exceptions import InvalidParameter, UnsupportedVariance
from .team import STATE, CostTerm, ObservationKernel, TeamProblem


@dataclass(frozen=True)
class WitsenhausenParams:
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise InvalidParameter(f"weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class RelayParams:
    num_agents: int = 3
    weights: tuple = (0.1, 0.1)
    state_std: float = 1.0
    noise_std: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if int(self.num_agents) != self.num_agents or self.num_agents < 2:
            raise InvalidParameter("relay needs at least two agents")
        if len(self.weights) != self.num_agents - 1:
            raise InvalidParameter(
                f"expected {self.num_agents - 1} power weights, got {len(self.weights)}"
            )
        if any(w < 0 for w in self.weights):
            raise InvalidParameter("power weights must be nonnegative")
        if self.state_std != 1.0 or self.noise_std != 1.0:
            raise UnsupportedVariance(
                "only unit state and noise variances are supported; rescale the problem"
            )


@dataclass(frozen=True)
class RadnerParams:
    r: float = 0.1

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParameter(f"r must be positive, got {self.r}")


def make_witsenhausen(params: WitsenhausenParams) -> TeamProblem:
    """y1 ~ N(0, 1); y2 = u1 + v; cost weight*(u1 - y1)**2 + (u2 - u1)**2."""
    w = params.weight

    def cost(x, ys, us):
        return w * (us[0] - ys[0]) ** 2 + (us[1] - us[0]) ** 2

    terms = (
        CostTerm(lambda x, ys, us: w * (us[0] - ys[0]) ** 2, agents=(0,)),
        CostTerm(lambda x, ys, us: (us[1] - us[0]) ** 2, agents=(0, 1)),
    )
    kernels = (ObservationKernel(parent=None), ObservationKernel(parent=0))
    return TeamProblem("witsenhausen", kernels, cost, terms, state_dim=0, params=params)


def make_relay(params: RelayParams) -> TeamProblem:
    """x ~ N(0, 1); y1 = x + v0; y_i = u_{i-1} + v_{i-1}; cost (u_N - x)**2 + sum l_i u_i**2."""
    n = params.num_agents
    weights = params.weights

    def cost(x, ys, us):
        c = (us[-1] - x) ** 2
        for li, u in zip(weights, us[:-1]):
            c = c + li * u * u
        return c

    terms = [CostTerm(lambda x, ys, us: (us[0] - x) ** 2, agents=(n - 1,), state=True)]
    for i, li in enumerate(weights):
        if li:
            terms.append(CostTerm(lambda x, ys, us, li=li: li * us[0] ** 2, agents=(i,)))
    kernels = (ObservationKernel(parent=STATE),) + tuple(
        ObservationKernel(parent=i - 1) for i in range(1, n)
    )
    return TeamProblem("relay", kernels, cost, tuple(terms), state_dim=1, params=params)


def make_radner(params: RadnerParams) -> TeamProblem:
    """x ~ N(0, 1); y_i = x + w_i; cost (x - u1 - u2)**2 + r*(u1**2 + u2**2)."""
    r = params.r

    def cost(x, ys, us):
        return (x - us[0] - us[1]) ** 2 + r * (us[0] ** 2 + us[1] ** 2)

    # expanded so that no term couples more than two variables
    terms = (
        CostTerm(lambda x, ys, us: x * x, state=True),
        CostTerm(lambda x, ys, us: (1 + r) * us[0] ** 2 - 2 * x * us[0], agents=(0,), state=True),
        CostTerm(lambda x, ys, us: (1 + r) * us[0] ** 2 - 2 * x * us[0], agents=(1,), state=True),
        CostTerm(lambda x, ys, us: 2 * us[0] * us[1], agents=(0, 1)),
    )
    kernels = (ObservationKernel(parent=STATE), ObservationKernel(parent=STATE))
    return TeamProblem("radner", kernels, cost, terms, state_dim=1, params=params)


_KINDS = {
    "witsenhausen": (WitsenhausenParams, make_witsenhausen),
    "relay": (RelayParams, make_relay),
    "radner": (RadnerParams, make_radner),
}


def make_problem(params) -> TeamProblem:
    for cls, factory in _KINDS.values():
        if isinstance(params, cls):
            return factory(params)
    raise InvalidParameter(f"unknown problem params {params!r}")


def problem_kind(params) -> str:
    for kind, (cls, _) in _KINDS.items():
        if isinstance(params, cls):
            return kind
    raise InvalidParameter(f"unknown problem params {params!r}")


def params_to_dict(params) -> dict:
    d = {"kind": problem_kind(params)}
    for key, value in asdict(params).items():
        d[key] = list(value) if isinstance(value, tuple) else value
    return d


def params_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise InvalidParameter(f"unknown problem kind {kind!r}")
    cls = _KINDS[kind][0]
    try:
        return cls(**d)
    except TypeError as exc:
        raise InvalidParameter(str(exc)) from None
