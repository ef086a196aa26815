import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from steerdistill import assemblage as asm
from steerdistill import filters as flt
from steerdistill import states as st
from steerdistill.filters import Strategy

THETAS = (0.2, 0.3, 0.5, 0.7, 0.78)
W1_POINTS = ((0.15, 0.15), (0.3, 0.3), (0.45, 0.5), (0.3, 0.5), (0.5, 0.45))
D0S = (0.13, 0.2, 0.3, 0.45, 0.55)


def _cases():
    for t in THETAS:
        for s in (Strategy.EQUAL, Strategy.SINGLE_B, Strategy.SINGLE_C):
            yield "1sdi", "gghz", {"theta": t}, s, 2 * math.sin(t) ** 2, "ghz"
        yield "2sdi", "gghz", {"theta": t}, None, 2 * math.sin(t) ** 2, "ghz"
    for c0, c1 in W1_POINTS:
        yield "1sdi", "gw", {"c0": c0, "c1": c1}, None, 3 * c0**2 * c1**2 / (1 - c0**2 - c1**2), "w"
    for d in D0S:
        yield "2sdi", "opgw", {"d0": d}, None, 3 * d * d, "w"


CASES = list(_cases())


@pytest.mark.parametrize("scenario,family,params,strategy,p_nd,target", CASES)
def test_outcome_zero_hits_target(scenario, family, params, strategy, p_nd, target):
    plan = flt.plan_for(scenario, family, strategy, **params)
    a = asm.build(scenario, st.make_state(family, **params))
    zero = tuple(0 for _ in plan.filters)
    updated, p = flt.apply_filter(a, plan, zero)
    assert updated.max_deviation(asm.closed_form(scenario, target)) <= 1e-10
    assert abs(p - p_nd) <= 1e-12
    assert updated.invariants().ok


@pytest.mark.parametrize("scenario,family,params,strategy,p_nd,target", CASES)
def test_outcome_distribution_complete(scenario, family, params, strategy, p_nd, target):
    plan = flt.plan_for(scenario, family, strategy, **params)
    a = asm.build(scenario, st.make_state(family, **params))
    dist = flt.outcome_distribution(a, plan)
    assert list(dist) == plan.joint_outcomes()
    assert abs(sum(dist.values()) - 1) <= 1e-12
    assert all(v >= -1e-15 for v in dist.values())


def test_identity_filter_at_pi_over_4():
    plan = flt.ghz_filters_1sdi(math.pi / 4, Strategy.SINGLE_B)
    assert np.allclose(plan.filters[0].k0, np.eye(2))
    assert np.allclose(plan.filters[0].k1, 0)
    with pytest.raises(flt.ZeroProbabilityBranch):
        flt.apply_filter(asm.build_1sdi(st.ghz()), plan, (1,))


@given(hst.floats(1e-3, math.pi / 4))
def test_ghz_filter_completeness(theta):
    for s in (Strategy.EQUAL, Strategy.SINGLE_B, Strategy.SINGLE_C):
        for f in flt.ghz_filters_1sdi(theta, s).filters:
            assert f.completeness_residual() <= 1e-12
    assert flt.ghz_filter_2sdi(theta).filters[0].completeness_residual() <= 1e-12


@given(hst.floats(1e-3, math.pi / 4 - 1e-6))
def test_bayes_chain_reassembles_kraus_sum(theta):
    # sum_o p_o * filtered_o = sum_o K_o sigma K_o^dagger, elementwise
    a = asm.build_1sdi(st.gghz(theta))
    plan = flt.ghz_filters_1sdi(theta, Strategy.EQUAL)
    parts = []
    for o in plan.joint_outcomes():
        try:
            parts.append(flt.apply_filter(a, plan, o))
        except flt.ZeroProbabilityBranch:
            continue
    assert abs(sum(p for _, p in parts) - 1) <= 1e-12
    for key, sigma in a.elements.items():
        direct = sum(plan.trusted_kraus(o) @ sigma @ plan.trusted_kraus(o).conj().T for o in plan.joint_outcomes())
        rebuilt = sum(p * u.elements[key] for u, p in parts)
        assert np.max(np.abs(rebuilt - direct)) <= 1e-12


def test_from_effect_builds_complete_povm():
    f = flt.FilterPOVM.from_effect(np.diag([0.25, 1.0]), "C")
    assert np.allclose(f.k0, np.diag([0.5, 1.0]))
    assert f.completeness_residual() <= 1e-12


def test_incomplete_filter_rejected():
    with pytest.raises(ValueError):
        flt.FilterPOVM(np.eye(2), np.eye(2), "B")


def test_plan_party_rules():
    f = flt.FilterPOVM(np.eye(2), np.zeros((2, 2)), "B")
    with pytest.raises(ValueError):
        flt.FilterPlan("2sdi", Strategy.CHARLIE_ONLY, (f,))
    with pytest.raises(ValueError):
        flt.FilterPlan("1sdi", Strategy.SINGLE_C, (f,))


def test_w1_strategy_restricted():
    with pytest.raises(ValueError):
        flt.plan_for("1sdi", "gw", "single-b", c0=0.3, c1=0.3)


def test_w1_filter_domain_error():
    with pytest.raises(st.DomainError):
        flt.w_filters_1sdi(0.6, 0.3)


def test_scenario_mismatch():
    with pytest.raises(TypeError):
        flt.outcome_distribution(asm.build_2sdi(st.ghz()), flt.ghz_filters_1sdi(0.3))


def test_plan_json_round_trip():
    plan = flt.plan_for("1sdi", "gw", c0=0.3, c1=0.45)
    again = flt.FilterPlan.from_dict(json.loads(plan.to_json()))
    assert again.to_json() == plan.to_json()
    assert again.strategy is Strategy.EQUAL
