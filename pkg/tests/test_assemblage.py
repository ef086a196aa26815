import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst

from steerdistill import assemblage as asm
from steerdistill import states as st
from steerdistill.opcore import partial_trace

from conftest import C_GRID, D_GRID, THETA_GRID, gghz_case

ORACLE_CASES = (
    [("1sdi", *gghz_case(t)) for t in THETA_GRID]
    + [("2sdi", *gghz_case(t)) for t in THETA_GRID]
    + [("1sdi", "gw", {"c0": c0, "c1": c1}) for c0, c1 in C_GRID]
    + [("2sdi", "opgw", {"d0": d}) for d in D_GRID]
    + [("1sdi", "ghz", {}), ("2sdi", "ghz", {}), ("1sdi", "w", {}), ("2sdi", "w", {})]
)


@pytest.mark.parametrize("scenario,family,params", ORACLE_CASES)
def test_tomographic_matches_closed_form(scenario, family, params):
    tomo = asm.build(scenario, st.make_state(family, **params))
    closed = asm.closed_form(scenario, family, **params)
    assert tomo.max_deviation(closed) <= 1e-10


@pytest.mark.parametrize("scenario,family,params", ORACLE_CASES)
def test_invariants_hold(scenario, family, params):
    a = asm.build(scenario, st.make_state(family, **params))
    report = a.invariants()
    assert report.ok, report.failures()
    assert report.no_signaling_residual <= 1e-10


def test_element_counts():
    assert len(asm.build_1sdi(st.ghz()).elements) == 6
    a2 = asm.build_2sdi(st.ghz())
    assert len(a2.elements) == 36
    zeros = [k for k, m in a2.elements.items() if not np.any(m)]
    assert sorted(zeros) == [(2, 2, 0, 1), (2, 2, 1, 0)]


def test_1sdi_ghz_z_element():
    # Alice finds Z=+1: Bob and Charlie are left in |00> with weight cos^2
    a = asm.build_1sdi(st.gghz(0.3))
    expected = np.zeros((4, 4))
    expected[0, 0] = math.cos(0.3) ** 2
    assert np.allclose(a.element((2,), (0,)), expected)


def test_reduced_state_matches_partial_trace():
    s = st.gw(0.3, 0.4)
    rho = st.density(s)
    assert np.allclose(asm.reduced_state(asm.build_1sdi(s)), partial_trace(rho, keep=(1, 2)))
    assert np.allclose(asm.reduced_state(asm.build_2sdi(s)), partial_trace(rho, keep=(2,)))


def test_missing_key_is_structural_error():
    elements = dict(asm.build_1sdi(st.ghz()).elements)
    del elements[(0, 0)]
    with pytest.raises(Exception):
        asm.Assemblage1SDI(elements, "broken")


def test_signaling_assemblage_rejected():
    elements = dict(asm.build_1sdi(st.ghz()).elements)
    elements[(0, 0)] = elements[(0, 0)] * 1.1
    with pytest.raises(asm.AssemblageInvariantError):
        asm.Assemblage1SDI(elements, "signaling")


@pytest.mark.parametrize("scenario", ["1sdi", "2sdi"])
def test_json_round_trip_is_bit_stable(scenario):
    a = asm.build(scenario, st.gw(0.3, 0.45))
    text = a.to_json()
    b = asm.from_json(text)
    assert type(b) is type(a)
    assert all(np.array_equal(a.elements[k], b.elements[k]) for k in a.elements)
    assert b.to_json() == text


@given(hst.floats(0.0, 1.0))
def test_mix_is_an_assemblage(w):
    a, b = asm.build_1sdi(st.gghz(0.3)), asm.build_1sdi(st.ghz())
    m = asm.mix([w, 1 - w], [a, b])
    assert m.invariants().ok
    assert np.allclose(m.element((0,), (1,)), w * a.element((0,), (1,)) + (1 - w) * b.element((0,), (1,)))


def test_mix_rejects_bad_weights():
    a = asm.build_1sdi(st.ghz())
    with pytest.raises(ValueError):
        asm.mix([0.3, 0.3], [a, a])


@given(hst.floats(1e-3, math.pi / 4 - 1e-6))
def test_probabilities_sum_to_one(theta):
    for scenario in ("1sdi", "2sdi"):
        a = asm.build(scenario, st.gghz(theta))
        probs = a.probabilities()
        half = a.n_parties
        for setting in a.settings():
            total = sum(p for k, p in probs.items() if k[:half] == tuple(setting))
            assert abs(total - 1) <= 1e-12
