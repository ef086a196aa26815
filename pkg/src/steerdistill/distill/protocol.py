"""N-copy distillation: exact statistics and a seeded Monte Carlo simulator.

Per trial, copies 1..N-1 are filtered and copy N is held back. A filtered copy
is kept when every participating trusted party reports outcome 0. A trial
succeeds when at least one copy is kept; otherwise the held-back copy is
retained unfiltered. The output assemblage averaged over trials is therefore
``P_success * target + P_fail * initial``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .. import assemblage as asm
from .. import filters as flt
from .. import inequalities as ineq
from .. import states as st
from ..analytics import FidelityBreakdown, assemblage_fidelity, closed_form_fidelity
from . import kernel

SCHEMA_VERSION = 1
BLOCK_TRIALS = 8192
SEED_LIMIT = 1 << 64

_SUPPORTED = {
    ("1sdi", "gghz"), ("1sdi", "ghz"), ("1sdi", "gw"), ("1sdi", "w"),
    ("2sdi", "gghz"), ("2sdi", "ghz"), ("2sdi", "opgw"), ("2sdi", "w"),
}
_PARAM_NAMES = {"gghz": ("theta",), "gw": ("c0", "c1"), "opgw": ("d0",), "ghz": (), "w": ()}


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run. ``trials == 0`` requests the analytic path only."""

    scenario: str
    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    copies: int = 2
    strategy: Optional[flt.Strategy] = None
    trials: int = 0
    seed: int = 0

    def __post_init__(self):
        scenario, family = self.scenario.lower(), self.family.lower()
        if (scenario, family) not in _SUPPORTED:
            raise ValueError(f"no distillation protocol for family {family!r} in scenario {scenario!r}")
        names = _PARAM_NAMES[family]
        missing = [n for n in names if n not in self.params]
        if missing:
            raise ValueError(f"family {family!r} needs parameters {missing}")
        params = {n: float(self.params[n]) for n in names}
        strategy = self.strategy
        if isinstance(strategy, str):
            strategy = flt.Strategy.parse(strategy)
        if scenario == "2sdi":
            if strategy not in (None, flt.Strategy.CHARLIE_ONLY):
                raise ValueError("two-sided protocols filter on Charlie only")
            strategy = flt.Strategy.CHARLIE_ONLY
        else:
            strategy = strategy or flt.Strategy.EQUAL
            if strategy is flt.Strategy.CHARLIE_ONLY:
                raise ValueError("strategy 'charlie' belongs to the two-sided scenario")
            if family in ("gw", "w") and strategy is not flt.Strategy.EQUAL:
                raise ValueError("the W-family one-sided protocol uses equal participation only")
        if int(self.copies) != self.copies or self.copies < 2:
            raise ValueError(f"copies must be an integer >= 2, got {self.copies!r}")
        if int(self.trials) != self.trials or self.trials < 0:
            raise ValueError(f"trials must be a non-negative integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < SEED_LIMIT):
            raise ValueError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "copies", int(self.copies))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))
        initial_state(self)  # family domain check

    @property
    def variant(self) -> str:
        w = self.family in ("gw", "w", "opgw")
        return ("w" if w else "ghz") + ("1" if self.scenario == "1sdi" else "2")

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "family": self.family,
            "params": dict(self.params),
            "copies": self.copies,
            "strategy": self.strategy.value,
            "trials": self.trials,
            "seed": self.seed,
        }


def initial_state(config: ProtocolConfig) -> st.TripartiteState:
    return st.make_state(config.family, **config.params)


def target_state(config: ProtocolConfig) -> st.TripartiteState:
    return st.ghz() if config.variant.startswith("ghz") else st.w()


def initial_assemblage(config: ProtocolConfig):
    return asm.build(config.scenario, initial_state(config))


def target_assemblage(config: ProtocolConfig):
    return asm.build(config.scenario, target_state(config))


def filter_plan(config: ProtocolConfig) -> flt.FilterPlan:
    return flt.plan_for(config.scenario, config.family, config.strategy, **config.params)


def p_nd_formula(config: ProtocolConfig) -> float:
    """Per-copy keep probability from the analytic expressions."""
    v, p = config.variant, config.params
    if v.startswith("ghz"):
        theta = p.get("theta", math.pi / 4)
        # the filter is exactly the identity at pi/4; 2 sin^2 would round below 1
        return 1.0 if theta >= math.pi / 4 else 2.0 * math.sin(theta) ** 2
    if v == "w1":
        c0, c1 = p.get("c0", st.SQRT3_INV), p.get("c1", st.SQRT3_INV)
        return 3.0 * c0 * c0 * c1 * c1 / (1.0 - c0 * c0 - c1 * c1)
    d0 = p.get("d0", st.SQRT3_INV)
    return 3.0 * d0 * d0


@dataclass(frozen=True)
class AnalyticProbabilities:
    p_nd: float
    p_fail: float
    p_success: float

    def as_dict(self) -> dict:
        return {"p_nd": self.p_nd, "p_fail": self.p_fail, "p_success": self.p_success}


def analytic_probabilities(config: ProtocolConfig) -> AnalyticProbabilities:
    p_nd = min(p_nd_formula(config), 1.0)
    p_fail = (1.0 - p_nd) ** (config.copies - 1)
    return AnalyticProbabilities(p_nd, p_fail, 1.0 - p_fail)


def violation_domain(config: ProtocolConfig) -> dict:
    """Where the initial parameters sit relative to the witnessed steering domain."""
    v, p = config.variant, config.params
    if config.family in ("ghz", "w"):
        return {"status": "target", "rule": "initial state equals the target state"}
    if v == "ghz1":
        inside = 0.185 < p["theta"] < math.pi / 4
        rule = "0.185 < theta < pi/4"
    elif v == "ghz2":
        inside = 0.22 < p["theta"] < math.pi / 4
        rule = "0.22 < theta < pi/4"
    elif v == "w1":
        inside = ineq.evaluate_W1(initial_assemblage(config)).violated
        rule = "W1 witness negative on the initial assemblage"
    else:
        inside = 3 / 25 < p["d0"] < st.SQRT3_INV
        rule = "3/25 < d0 < 1/sqrt(3)"
    return {"status": "inside" if inside else "outside", "rule": rule}


def average_output_assemblage(config: ProtocolConfig):
    """P_success * target + P_fail * initial, elementwise."""
    probs = analytic_probabilities(config)
    label = f"average_output({config.variant},N={config.copies})"
    return asm.mix([probs.p_success, probs.p_fail], [target_assemblage(config), initial_assemblage(config)], label)


@dataclass(frozen=True)
class EmpiricalStatistics:
    trials: int
    successes: int
    retained_copies: int
    zero_survivors: int
    analytic_p_success: float

    @property
    def success_frequency(self) -> float:
        return self.successes / self.trials

    @property
    def mean_retained_copies(self) -> float:
        return self.retained_copies / self.trials

    @property
    def zero_survivor_frequency(self) -> float:
        return self.zero_survivors / self.trials

    @property
    def binomial_sigma(self) -> float:
        p = self.analytic_p_success
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    @property
    def deviation_sigmas(self) -> float:
        diff = abs(self.success_frequency - self.analytic_p_success)
        sigma = self.binomial_sigma
        if sigma == 0.0:
            return 0.0 if diff <= 1e-12 else math.inf
        return diff / sigma

    @property
    def within_4_sigma(self) -> bool:
        return self.deviation_sigmas <= 4.0

    def as_dict(self) -> dict:
        dev = self.deviation_sigmas
        return {
            "trials": self.trials,
            "successes": self.successes,
            "success_frequency": self.success_frequency,
            "retained_copies": self.retained_copies,
            "mean_retained_copies": self.mean_retained_copies,
            "zero_survivors_per_party_rule": self.zero_survivors,
            "zero_survivor_frequency_per_party_rule": self.zero_survivor_frequency,
            "binomial_sigma": self.binomial_sigma,
            "deviation_sigmas": dev if math.isfinite(dev) else None,
            "within_4_sigma": self.within_4_sigma,
        }


@dataclass(frozen=True)
class DistillationReport:
    config: ProtocolConfig
    analytic: AnalyticProbabilities
    empirical: Optional[EmpiricalStatistics]
    average_assemblage: asm._Assemblage
    fidelity: FidelityBreakdown
    fidelity_closed: float
    domain: Mapping[str, str]
    outcome_distribution: Mapping[tuple, float]

    @property
    def fidelity_to_target(self) -> float:
        return self.fidelity.minimum

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "distillation_report",
            "config": self.config.as_dict(),
            "seed": self.config.seed,
            "domain": dict(self.domain),
            "analytic": self.analytic.as_dict(),
            "outcome_distribution": {"".join(map(str, k)): v for k, v in self.outcome_distribution.items()},
            "empirical": self.empirical.as_dict() if self.empirical else None,
            "fidelity_to_target": self.fidelity_to_target,
            "fidelity_closed_form": self.fidelity_closed,
            "fidelity_breakdown": self.fidelity.as_dict(),
            "output_copy_rule": "first retained copy",
            "average_assemblage": self.average_assemblage.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _cdf(dist: Mapping[tuple, float], plan: flt.FilterPlan) -> np.ndarray:
    probs = np.array([max(dist[o], 0.0) for o in plan.joint_outcomes()], dtype=np.float64)
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    return np.ascontiguousarray(cdf)


def _run_block(config: ProtocolConfig, block: int, cdf: np.ndarray, two_party: bool, tally) -> tuple[int, int, int]:
    start = block * BLOCK_TRIALS
    n = min(BLOCK_TRIALS, config.trials - start)
    u = _block_generator(config.seed, block).random((n, config.copies - 1))
    return tally(np.ascontiguousarray(u), cdf, two_party)


def simulate_counts(config: ProtocolConfig, cdf: np.ndarray, two_party: bool, workers: int = 1, tally=None) -> tuple[int, int, int]:
    """Sum (successes, retained, zero_survivors) over all trial blocks.

    Each block of ``BLOCK_TRIALS`` consecutive trials draws from its own
    generator keyed by (seed, block index), so the totals do not depend on
    ``workers`` or scheduling.
    """
    tally = tally or kernel.tally_block
    n_blocks = -(-config.trials // BLOCK_TRIALS)
    job = lambda b: _run_block(config, b, cdf, two_party, tally)
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(n_blocks)))
    else:
        parts = [job(b) for b in range(n_blocks)]
    return tuple(int(sum(p[i] for p in parts)) for i in range(3))


def _check_consistent(config: ProtocolConfig, assemblage, plan: flt.FilterPlan):
    if plan.scenario != config.scenario:
        raise ValueError(f"plan scenario {plan.scenario} does not match config scenario {config.scenario}")
    if assemblage.scenario != config.scenario:
        raise ValueError(f"assemblage scenario {assemblage.scenario} does not match config scenario {config.scenario}")
    if plan.strategy is not config.strategy:
        raise ValueError(f"plan strategy {plan.strategy.value} does not match config strategy {config.strategy.value}")


def run_monte_carlo(config: ProtocolConfig, assemblage=None, plan: flt.FilterPlan | None = None, workers: int = 1) -> DistillationReport:
    """Analytic statistics plus (when ``config.trials > 0``) the seeded simulation."""
    assemblage = assemblage if assemblage is not None else initial_assemblage(config)
    plan = plan or filter_plan(config)
    _check_consistent(config, assemblage, plan)
    dist = flt.outcome_distribution(assemblage, plan)
    analytic = analytic_probabilities(config)
    empirical = None
    if config.trials > 0:
        two_party = len(plan.filters) == 2
        s, r, z = simulate_counts(config, _cdf(dist, plan), two_party, workers)
        empirical = EmpiricalStatistics(config.trials, s, r, z, analytic.p_success)
    avg = average_output_assemblage(config)
    target = target_assemblage(config)
    return DistillationReport(
        config=config,
        analytic=analytic,
        empirical=empirical,
        average_assemblage=avg,
        fidelity=assemblage_fidelity(avg, target),
        fidelity_closed=closed_form_fidelity(config.family, config.params, config.scenario, config.copies),
        domain=violation_domain(config),
        outcome_distribution=dist,
    )
