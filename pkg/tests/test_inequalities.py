import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from steerdistill import assemblage as asm
from steerdistill import inequalities as ineq
from steerdistill import states as st

PRODUCT = st.explicit(np.eye(8)[0], "product000")

# frozen from an independent evaluation of the coefficient tables
OPTIMA = {"g1": -0.8453, "g2": -0.581, "w1": -0.7595, "w2": -0.480367}
PRODUCT_VALUES = {"g1": 0.48803, "g2": 0.451, "w1": 2.7317, "w2": 2.5651}


def _target(name):
    family = "ghz" if name in ("g1", "g2") else "w"
    return asm.build(ineq.SCENARIO[name], st.make_state(family))


@pytest.mark.parametrize("name", sorted(OPTIMA))
def test_optimal_values(name):
    assert abs(ineq.evaluate(name, _target(name)).value - OPTIMA[name]) <= 5e-4


@pytest.mark.parametrize("name", sorted(PRODUCT_VALUES))
def test_product_state_not_violated(name):
    val = ineq.evaluate(name, asm.build(ineq.SCENARIO[name], PRODUCT))
    assert abs(val.value - PRODUCT_VALUES[name]) <= 5e-4
    assert not val.violated


def test_w2_at_opgw_012():
    val = ineq.evaluate_W2(asm.build_2sdi(st.opgw(0.12)))
    assert abs(val.value - (-0.024794)) <= 1e-5


def test_wrong_scenario_rejected():
    with pytest.raises(TypeError):
        ineq.evaluate_G1(asm.build_2sdi(st.ghz()))
    with pytest.raises(TypeError):
        ineq.evaluate_W2(asm.build_1sdi(st.w()))


def test_unknown_name():
    with pytest.raises((KeyError, ValueError)):
        ineq.evaluate("g7", _target("g1"))


def test_term_names():
    assert ineq.CorrelatorSpec(1.0, "ZZ", 2).name == "<A3 Z_B Z_C>"
    assert ineq.CorrelatorSpec(1.0, "X", 0, 1).name == "<A1 B2 X>"
    with pytest.raises(ValueError):
        ineq.CorrelatorSpec(1.0, "Q", 0)


@pytest.mark.parametrize("name", sorted(ineq.TERMS))
def test_as_dict_is_consistent(name):
    val = ineq.evaluate(name, _target(name))
    doc = val.as_dict()
    assert doc["violated"] is True
    assert abs(doc["constant"] + sum(t["contribution"] for t in doc["terms"]) - doc["value"]) <= 1e-12


@given(hst.floats(0.0, 1.0), hst.floats(1e-3, math.pi / 4 - 1e-6))
def test_evaluator_is_affine_in_mixtures(w, theta):
    for name in ("g1", "g2"):
        sc = ineq.SCENARIO[name]
        a, b = asm.build(sc, st.gghz(theta)), asm.build(sc, PRODUCT)
        mixed = ineq.evaluate(name, asm.mix([w, 1 - w], [a, b])).value
        expected = w * ineq.evaluate(name, a).value + (1 - w) * ineq.evaluate(name, b).value
        assert abs(mixed - expected) <= 1e-12


@given(hst.floats(1e-3, st.SQRT3_INV), hst.floats(1e-3, st.SQRT3_INV - 1e-6))
def test_correlators_bounded(c0, c1):
    s = st.gw(c0, c1)
    for name in ineq.TERMS:
        for t in ineq.evaluate(name, asm.build(ineq.SCENARIO[name], s)).terms:
            assert abs(t.correlator) <= 1 + 1e-10


def test_g1_g2_strictly_decrease_in_theta():
    grid = [0.1 * k for k in range(1, 8)] + [math.pi / 4]
    for name in ("g1", "g2"):
        sc = ineq.SCENARIO[name]
        vals = [ineq.evaluate(name, asm.build(sc, st.gghz(t) if t < math.pi / 4 else st.ghz())).value for t in grid]
        assert all(b < a for a, b in zip(vals, vals[1:])), vals


def test_g2_at_theta_07_violated():
    assert ineq.evaluate_G2(asm.build_2sdi(st.gghz(0.7))).violated
