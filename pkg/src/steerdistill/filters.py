"""Local filter POVMs on the trusted parties and the single-copy update rule.

Outcome 0 of every filter means "keep"; a copy survives when all
participating parties report 0.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import states as st
from .assemblage import Assemblage1SDI, Assemblage2SDI, reduced_state
from .opcore import frozen, kron, psd_sqrt

SCHEMA_VERSION = 1
COMPLETENESS_TOL = 1e-8
ZERO_BRANCH_TOL = 1e-14


class ZeroProbabilityBranch(ValueError):
    """The requested filter outcome has (numerically) zero probability."""


class Strategy(str, enum.Enum):
    EQUAL = "equal"
    SINGLE_B = "single-b"
    SINGLE_C = "single-c"
    CHARLIE_ONLY = "charlie"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        aliases = {"equal": cls.EQUAL, "1": cls.EQUAL, "single-b": cls.SINGLE_B, "b": cls.SINGLE_B,
                   "single-c": cls.SINGLE_C, "c": cls.SINGLE_C, "charlie": cls.CHARLIE_ONLY}
        try:
            return aliases[text.lower()]
        except KeyError:
            raise ValueError(f"unknown strategy {text!r}; expected one of {sorted(aliases)}") from None


STRATEGY_PARTIES = {
    Strategy.EQUAL: ("B", "C"),
    Strategy.SINGLE_B: ("B",),
    Strategy.SINGLE_C: ("C",),
    Strategy.CHARLIE_ONLY: ("C",),
}


@dataclass(frozen=True)
class FilterPOVM:
    """Two Kraus operators for one trusted qubit."""

    k0: np.ndarray
    k1: np.ndarray
    party: str

    def __post_init__(self):
        if self.party not in ("B", "C"):
            raise ValueError(f"filters act on B or C, not {self.party!r}")
        k0, k1 = frozen(self.k0), frozen(self.k1)
        if k0.shape != (2, 2) or k1.shape != (2, 2):
            raise ValueError("Kraus operators must be 2x2")
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "k1", k1)
        res = self.completeness_residual()
        if res > COMPLETENESS_TOL:
            raise ValueError(f"filter on {self.party} is incomplete: |K0'K0 + K1'K1 - 1| = {res:.3e}")

    def kraus(self, outcome: int) -> np.ndarray:
        return self.k0 if outcome == 0 else self.k1

    def effect(self, outcome: int) -> np.ndarray:
        k = self.kraus(outcome)
        return k.conj().T @ k

    def completeness_residual(self) -> float:
        return float(np.max(np.abs(self.effect(0) + self.effect(1) - np.eye(2))))

    @classmethod
    def from_effect(cls, g0, party: str) -> "FilterPOVM":
        """Build K_o = sqrt(G_o) from a user-supplied keep effect G_0."""
        g0 = np.asarray(g0, dtype=np.complex128)
        return cls(psd_sqrt(g0), psd_sqrt(np.eye(2) - g0), party)

    def to_dict(self) -> dict:
        flat = lambda m: [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
        return {"party": self.party, "k0": flat(self.k0), "k1": flat(self.k1)}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FilterPOVM":
        unflat = lambda e: np.array([complex(r, i) for r, i in e]).reshape(2, 2)
        return cls(unflat(doc["k0"]), unflat(doc["k1"]), doc["party"])


@dataclass(frozen=True)
class FilterPlan:
    scenario: str
    strategy: Strategy
    filters: tuple[FilterPOVM, ...]

    def __post_init__(self):
        parties = tuple(f.party for f in self.filters)
        if self.scenario == "2sdi":
            if parties != ("C",):
                raise ValueError("two-sided plans use exactly one filter on C")
        elif self.scenario == "1sdi":
            if parties not in (("B", "C"), ("B",), ("C",)):
                raise ValueError(f"one-sided plans filter B and/or C in that order, got {parties}")
        else:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if parties != STRATEGY_PARTIES[self.strategy]:
            raise ValueError(f"strategy {self.strategy.value} expects parties {STRATEGY_PARTIES[self.strategy]}, got {parties}")

    @property
    def parties(self) -> tuple[str, ...]:
        return tuple(f.party for f in self.filters)

    def joint_outcomes(self) -> list[tuple[int, ...]]:
        return list(itertools.product((0, 1), repeat=len(self.filters)))

    def trusted_kraus(self, outcomes: Sequence[int]) -> np.ndarray:
        """Kraus operator on the full trusted space for a joint outcome."""
        outcomes = tuple(outcomes)
        if len(outcomes) != len(self.filters):
            raise ValueError(f"need one outcome per filtering party {self.parties}, got {outcomes}")
        if self.scenario == "2sdi":
            return self.filters[0].kraus(outcomes[0])
        by_party = {f.party: f.kraus(o) for f, o in zip(self.filters, outcomes)}
        eye = np.eye(2, dtype=np.complex128)
        return kron(by_party.get("B", eye), by_party.get("C", eye))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "filter_plan",
            "scenario": self.scenario,
            "strategy": self.strategy.value,
            "filters": [f.to_dict() for f in self.filters],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FilterPlan":
        if int(doc.get("schema_version", -1)) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
        return cls(doc["scenario"], Strategy(doc["strategy"]), tuple(FilterPOVM.from_dict(f) for f in doc["filters"]))


def _diag(a: float, b: float) -> np.ndarray:
    return np.diag([a, b]).astype(np.complex128)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta <= math.pi / 4 + 1e-15):
        raise st.DomainError("theta", theta, "0 < theta <= pi/4")
    return min(theta, math.pi / 4)


def _tan_ratio(theta: float) -> float:
    # tan(pi/4) rounds to 1 - 1.1e-16, which would leave a 1.5e-8 discard operator
    return 1.0 if theta >= math.pi / 4 else math.tan(theta)


def _sqrt_nonneg(v: float, name: str, bound: str) -> float:
    if v < 0.0:
        if v > -1e-12:
            return 0.0
        raise st.DomainError(name, v, bound)
    return math.sqrt(v)


def ghz_filters_1sdi(theta: float, strategy: Strategy | str = Strategy.EQUAL) -> FilterPlan:
    theta = _check_theta(theta)
    strategy = Strategy.parse(strategy) if isinstance(strategy, str) else strategy
    t = _tan_ratio(theta)
    if strategy is Strategy.EQUAL:
        k0, k1 = _diag(math.sqrt(t), 1.0), _diag(math.sqrt(1.0 - t), 0.0)
        return FilterPlan("1sdi", strategy, (FilterPOVM(k0, k1, "B"), FilterPOVM(k0, k1, "C")))
    if strategy in (Strategy.SINGLE_B, Strategy.SINGLE_C):
        party = "B" if strategy is Strategy.SINGLE_B else "C"
        k0, k1 = _diag(t, 1.0), _diag(math.sqrt(1.0 - t * t), 0.0)
        return FilterPlan("1sdi", strategy, (FilterPOVM(k0, k1, party),))
    raise ValueError(f"strategy {strategy.value} does not apply to the one-sided scenario")


def ghz_filter_2sdi(theta: float) -> FilterPlan:
    theta = _check_theta(theta)
    t = _tan_ratio(theta)
    k0, k1 = _diag(t, 1.0), _diag(math.sqrt(1.0 - t * t), 0.0)
    return FilterPlan("2sdi", Strategy.CHARLIE_ONLY, (FilterPOVM(k0, k1, "C"),))


def w_filters_1sdi(c0: float, c1: float) -> FilterPlan:
    c0, c1 = float(c0), float(c1)
    if not (0.0 < c0 <= st.SQRT3_INV + 1e-15):
        raise st.DomainError("c0", c0, "0 < c0 <= 1/sqrt(3)")
    if not (0.0 < c1 <= st.SQRT3_INV + 1e-15):
        raise st.DomainError("c1", c1, "0 < c1 <= 1/sqrt(3)")
    r2 = 1.0 - c0 * c0 - c1 * c1
    r = math.sqrt(r2)
    kb1 = _sqrt_nonneg((1.0 - c0 * c0 - 2.0 * c1 * c1) / r2, "1-c0^2-2c1^2", "1 - c0^2 - 2 c1^2 >= 0")
    kc1 = _sqrt_nonneg((1.0 - 2.0 * c0 * c0 - c1 * c1) / r2, "1-2c0^2-c1^2", "1 - 2 c0^2 - c1^2 >= 0")
    fb = FilterPOVM(_diag(c1 / r, 1.0), _diag(kb1, 0.0), "B")
    fc = FilterPOVM(_diag(c0 / r, 1.0), _diag(kc1, 0.0), "C")
    return FilterPlan("1sdi", Strategy.EQUAL, (fb, fc))


def w_filter_2sdi(d0: float) -> FilterPlan:
    d0 = float(d0)
    if not (0.0 < d0 <= st.SQRT3_INV + 1e-15):
        raise st.DomainError("d0", d0, "0 < d0 <= 1/sqrt(3)")
    ratio = 2.0 * d0 * d0 / (1.0 - d0 * d0)
    k1 = _sqrt_nonneg(1.0 - ratio, "1-2d0^2/(1-d0^2)", "d0 <= 1/sqrt(3)")
    k0 = _diag(min(math.sqrt(ratio), 1.0), 1.0)
    return FilterPlan("2sdi", Strategy.CHARLIE_ONLY, (FilterPOVM(k0, _diag(k1, 0.0), "C"),))


def plan_for(scenario: str, family: str, strategy: Strategy | str | None = None, **params: float) -> FilterPlan:
    """Built-in plan for a protocol variant, keyed by the initial state family."""
    scenario, family = scenario.lower(), family.lower()
    if scenario == "1sdi" and family in ("gghz", "ghz"):
        theta = params.get("theta", math.pi / 4) if family == "gghz" else math.pi / 4
        return ghz_filters_1sdi(theta, strategy or Strategy.EQUAL)
    if scenario == "1sdi" and family in ("gw", "w"):
        if strategy is not None and Strategy.parse(str(getattr(strategy, "value", strategy))) is not Strategy.EQUAL:
            raise ValueError("the W-family one-sided protocol uses equal participation only")
        if family == "w":
            return w_filters_1sdi(st.SQRT3_INV, st.SQRT3_INV)
        return w_filters_1sdi(params["c0"], params["c1"])
    if scenario == "2sdi" and family in ("gghz", "ghz"):
        return ghz_filter_2sdi(params.get("theta", math.pi / 4) if family == "gghz" else math.pi / 4)
    if scenario == "2sdi" and family in ("opgw", "w"):
        return w_filter_2sdi(params["d0"] if family == "opgw" else st.SQRT3_INV)
    raise ValueError(f"no built-in filter plan for {family!r} in scenario {scenario!r}")


def outcome_probability(rho: np.ndarray, plan: FilterPlan, outcomes: Sequence[int]) -> float:
    k = plan.trusted_kraus(outcomes)
    return float(np.trace(k @ rho @ k.conj().T).real)


def outcome_distribution(assemblage, plan: FilterPlan) -> dict[tuple[int, ...], float]:
    """Joint filter-outcome probabilities on one copy, in ``plan.joint_outcomes()`` order."""
    _check_scenario(assemblage, plan)
    rho = reduced_state(assemblage)
    return {o: outcome_probability(rho, plan, o) for o in plan.joint_outcomes()}


def _check_scenario(assemblage, plan: FilterPlan):
    expected = Assemblage1SDI if plan.scenario == "1sdi" else Assemblage2SDI
    if not isinstance(assemblage, expected):
        raise TypeError(f"{plan.scenario} plan applied to a {type(assemblage).__name__}")


def _apply(assemblage, plan: FilterPlan, outcomes: Sequence[int]):
    _check_scenario(assemblage, plan)
    k = plan.trusted_kraus(outcomes)
    kd = k.conj().T
    p = float(np.trace(k @ reduced_state(assemblage) @ kd).real)
    if p < ZERO_BRANCH_TOL:
        raise ZeroProbabilityBranch(f"filter outcome {tuple(outcomes)} has probability {p:.3e}")
    label = f"{assemblage.label}|filtered{tuple(outcomes)}"
    updated = assemblage.map_elements(lambda m: (k @ m @ kd) / p, label)
    return updated, p


def apply_filter_1sdi(assemblage: Assemblage1SDI, plan: FilterPlan, outcomes: Sequence[int]):
    """Filtered, renormalized assemblage and the outcome probability."""
    return _apply(assemblage, plan, outcomes)


def apply_filter_2sdi(assemblage: Assemblage2SDI, plan: FilterPlan, outcome):
    outcomes = (outcome,) if isinstance(outcome, (int, np.integer)) else tuple(outcome)
    return _apply(assemblage, plan, outcomes)


def apply_filter(assemblage, plan: FilterPlan, outcomes):
    if plan.scenario == "1sdi":
        return apply_filter_1sdi(assemblage, plan, outcomes)
    return apply_filter_2sdi(assemblage, plan, outcomes)
