import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as hst

from steerdistill import analytics as an
from steerdistill import assemblage as asm
from steerdistill import states as st
from steerdistill.distill import ProtocolConfig, average_output_assemblage, target_assemblage

from conftest import C_GRID, D_GRID, THETA_GRID, gghz_case

COPIES = (2, 3, 5, 7, 10, 20, 50)


def _grid():
    for t in THETA_GRID:
        fam, p = gghz_case(t)
        yield "1sdi", fam, p
        yield "2sdi", fam, p
    for c0, c1 in C_GRID:
        yield "1sdi", "gw", {"c0": c0, "c1": c1}
    for d in D_GRID:
        yield "2sdi", "opgw", {"d0": d}


GRID = list(_grid())


@pytest.mark.parametrize("scenario,family,params", GRID)
def test_closed_form_matches_direct(scenario, family, params):
    for N in COPIES:
        cfg = ProtocolConfig(scenario, family, params, copies=N)
        direct = an.assemblage_fidelity(average_output_assemblage(cfg), target_assemblage(cfg)).minimum
        assert abs(an.closed_form_fidelity(family, params, scenario, N) - direct) <= 1e-9


@pytest.mark.parametrize("scenario,family,params", GRID)
def test_per_setting_sums_equal_branch_candidates(scenario, family, params):
    N = 5
    cfg = ProtocolConfig(scenario, family, params, copies=N)
    fb = an.assemblage_fidelity(average_output_assemblage(cfg), target_assemblage(cfg))
    cand = an.branch_candidates(family, params, scenario, N)
    for setting, branch in an.SETTING_BRANCH[cfg.variant].items():
        assert abs(fb.per_setting[setting] - cand[branch]) <= 1e-9, (setting, branch)


@pytest.mark.parametrize("theta,N,expected", [(0.25, 7, 0.939), (0.5, 5, 0.997), (0.3, 2, 0.906), (0.3, 5, 0.948), (0.3, 10, 0.980)])
def test_quoted_fidelities(theta, N, expected):
    assert abs(an.closed_form_fidelity("gghz", {"theta": theta}, "1sdi", N) - expected) <= 1e-3


def test_decay_parameters_reproduce_closed_form():
    for scenario, family, params in GRID:
        k, q = an.decay_parameters(family, params, scenario)
        for N in (2, 7):
            F = an.closed_form_fidelity(family, params, scenario, N)
            assert abs(F * F - (1 - k * q ** (N - 1))) <= 1e-12


def test_fidelity_of_assemblage_with_itself_is_one():
    for scenario in ("1sdi", "2sdi"):
        a = asm.build(scenario, st.gghz(0.4))
        assert abs(an.assemblage_fidelity(a, a).minimum - 1) <= 1e-9


def test_fidelity_scenario_mismatch():
    with pytest.raises(ValueError):
        an.assemblage_fidelity(asm.build_1sdi(st.ghz()), asm.build_2sdi(st.ghz()))


@given(hst.floats(0.186, math.pi / 4 - 1e-9), hst.integers(2, 50))
def test_ghz_branch_ordering(theta, N):
    for scenario in ("1sdi", "2sdi"):
        assert an.min_branch_check("gghz", {"theta": theta}, scenario, N).holds


@given(hst.floats(1e-3, st.SQRT3_INV), hst.floats(1e-3, st.SQRT3_INV), hst.integers(2, 50))
def test_w1_branch_ordering(c0, c1, N):
    assert an.min_branch_check("gw", {"c0": c0, "c1": c1}, "1sdi", N).holds


@given(hst.floats(1e-3, st.SQRT3_INV), hst.integers(2, 50))
def test_w2_branch_ordering(d0, N):
    assert an.min_branch_check("opgw", {"d0": d0}, "2sdi", N).holds


def test_branch_check_raises_on_violation(monkeypatch):
    monkeypatch.setitem(an.CLAIMED_MIN, "ghz1", "f1")
    with pytest.raises(an.BranchOrderingError, match="f0"):
        an.min_branch_check("gghz", {"theta": 0.3}, "1sdi", 3)
    assert not an.min_branch_check("gghz", {"theta": 0.3}, "1sdi", 3, strict=False).holds


@given(hst.floats(0.01, math.pi / 4 - 0.01))
def test_fidelity_increases_with_copies(theta):
    vals = [an.closed_form_fidelity("gghz", {"theta": theta}, "1sdi", N) for N in COPIES]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("family,params,expected", [
    ("gghz", {"theta": 0.25}, 56),
    ("gghz", {"theta": 0.5}, 11),
    ("gw", {"c0": 0.45, "c1": 0.5}, 18),
    ("gw", {"c0": 0.15, "c1": 0.25}, 1639),
])
def test_n_min(family, params, expected):
    scenario = "1sdi"
    n = an.n_min(an.NminQuery(family, params, scenario))
    assert n == expected
    assert 1 - an.closed_form_fidelity(family, params, scenario, n) <= 1e-4
    assert 1 - an.closed_form_fidelity(family, params, scenario, n - 1) > 1e-4


def test_n_min_squared_convention():
    q = an.NminQuery("gw", {"c0": 0.15, "c1": 0.25}, "1sdi", convention="one_minus_F2")
    n = an.n_min(q)
    F = lambda k: an.closed_form_fidelity("gw", {"c0": 0.15, "c1": 0.25}, "1sdi", k)
    assert 1 - F(n) ** 2 <= 1e-4 < 1 - F(n - 1) ** 2


def test_n_min_bad_inputs():
    with pytest.raises(ValueError):
        an.NminQuery("gghz", {"theta": 0.3}, "1sdi", epsilon=0.0)
    with pytest.raises(ValueError):
        an.NminQuery("gghz", {"theta": 0.3}, "1sdi", convention="F")
    with pytest.raises(ValueError):
        an.closed_form_fidelity("gghz", {"theta": 0.3}, "1sdi", 1)


def test_csv_format():
    buf = io.StringIO()
    rows = [{"a": 1 / 3, "b": 2, "c": "x"}]
    assert an.write_csv(rows, ("a", "b", "c"), buf) == ""
    assert an.write_csv(rows, ("a", "b", "c")) == buf.getvalue()
    lines = buf.getvalue().splitlines()
    assert lines == ["a,b,c", "0.333333333333,2,x"]
