"""Assemblage fidelity, its closed forms, branch diagnostics and N_min.

Every protocol variant has a fidelity of the form
``F(N)^2 = 1 - kappa * q**(N-1)`` with ``q = 1 - p_nd`` the per-copy discard
probability. ``decay_parameters`` exposes (kappa, q); the N_min solver uses
them and then confirms the answer by direct evaluation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .assemblage import Assemblage1SDI, Assemblage2SDI, _Assemblage
from .opcore import uhlmann_fidelity
from .states import SQRT3_INV, DomainError

CSV_DIGITS = 12

CONVENTIONS = ("one_minus_F", "one_minus_F2")


@dataclass(frozen=True)
class FidelityBreakdown:
    per_setting: Mapping[tuple, float]
    minimum: float
    argmin_setting: tuple

    def as_dict(self) -> dict:
        return {
            "per_setting": {",".join(map(str, k)): v for k, v in self.per_setting.items()},
            "minimum": self.minimum,
            "argmin_setting": list(self.argmin_setting),
        }


def assemblage_fidelity(dist: _Assemblage, target: _Assemblage) -> FidelityBreakdown:
    """min over settings of the outcome-summed root fidelities."""
    if type(dist) is not type(target):
        raise ValueError(f"scenario mismatch: {dist.scenario} vs {target.scenario}")
    per = {}
    for s in dist.settings():
        # target first so a pure target element takes the rank-one route
        per[s] = sum(uhlmann_fidelity(target.element(s, o), dist.element(s, o)) for o in dist.outcomes())
    arg = min(per, key=lambda k: per[k])
    return FidelityBreakdown(per, float(per[arg]), arg)


# closed forms


def _variant(family: str, scenario: str) -> str:
    family, scenario = family.lower(), scenario.lower()
    table = {
        ("gghz", "1sdi"): "ghz1", ("ghz", "1sdi"): "ghz1",
        ("gghz", "2sdi"): "ghz2", ("ghz", "2sdi"): "ghz2",
        ("gw", "1sdi"): "w1", ("w", "1sdi"): "w1",
        ("opgw", "2sdi"): "w2", ("w", "2sdi"): "w2",
    }
    try:
        return table[(family, scenario)]
    except KeyError:
        raise ValueError(f"no distillation protocol for family {family!r} in scenario {scenario!r}") from None


def _params(family: str, params: Mapping[str, float]) -> dict[str, float]:
    family = family.lower()
    if family == "ghz":
        return {"theta": math.pi / 4}
    if family == "w":
        return {"c0": SQRT3_INV, "c1": SQRT3_INV, "d0": SQRT3_INV}
    if family == "gghz":
        theta = float(params["theta"])
        if not (0.0 < theta <= math.pi / 4):
            raise DomainError("theta", theta, "0 < theta <= pi/4")
        return {"theta": theta}
    if family == "gw":
        c0, c1 = float(params["c0"]), float(params["c1"])
        if not (0.0 < c0 <= SQRT3_INV + 1e-15 and 0.0 < c1 <= SQRT3_INV + 1e-15):
            raise DomainError("c0,c1", (c0, c1), "0 < c0, c1 <= 1/sqrt(3)")
        return {"c0": c0, "c1": c1}
    if family == "opgw":
        d0 = float(params["d0"])
        if not (0.0 < d0 <= SQRT3_INV + 1e-15):
            raise DomainError("d0", d0, "0 < d0 <= 1/sqrt(3)")
        return {"d0": d0}
    raise ValueError(f"unknown family {family!r}")


def _check_copies(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"copies must be an integer >= 2, got {n!r}")
    return int(n)


def closed_form_fidelity(family: str, params: Mapping[str, float], scenario: str, N: int) -> float:
    N = _check_copies(N)
    v = _variant(family, scenario)
    p = _params(family, params)
    if v in ("ghz1", "ghz2"):
        th = p["theta"]
        return math.sqrt(1.0 - 0.5 * (1.0 - math.sin(2 * th)) * math.cos(2 * th) ** (N - 1))
    if v == "w1":
        c0, c1 = p["c0"], p["c1"]
        r = math.sqrt(1.0 - c0 * c0 - c1 * c1)
        X = 1.0 - 3.0 * c0 * c0 * c1 * c1 / (r * r)
        return math.sqrt(X ** (N - 1) * ((c0 + c1 + r) ** 2 - 3.0) + 3.0) / math.sqrt(3.0)
    d0 = p["d0"]
    h = math.sqrt((1.0 - d0 * d0) / 2.0)
    return math.sqrt(3.0 - 2.0 * (h - d0) ** 2 * (1.0 - 3.0 * d0 * d0) ** (N - 1)) / math.sqrt(3.0)


def decay_parameters(family: str, params: Mapping[str, float], scenario: str) -> tuple[float, float]:
    """(kappa, q) with F(N)^2 = 1 - kappa * q**(N-1)."""
    v = _variant(family, scenario)
    p = _params(family, params)
    if v in ("ghz1", "ghz2"):
        th = p["theta"]
        return 0.5 * (1.0 - math.sin(2 * th)), math.cos(2 * th)
    if v == "w1":
        c0, c1 = p["c0"], p["c1"]
        r = math.sqrt(1.0 - c0 * c0 - c1 * c1)
        return (3.0 - (c0 + c1 + r) ** 2) / 3.0, 1.0 - 3.0 * c0 * c0 * c1 * c1 / (r * r)
    d0 = p["d0"]
    h = math.sqrt((1.0 - d0 * d0) / 2.0)
    return 2.0 * (h - d0) ** 2 / 3.0, 1.0 - 3.0 * d0 * d0


# branch candidates: outcome-summed fidelity at each setting, written per family


def _f_branches(theta: float, N: int) -> dict[str, float]:
    c = math.cos(2 * theta)
    return {
        "f0": math.sqrt(1.0 - 0.5 * (1.0 - math.sin(2 * theta)) * c ** (N - 1)),
        "f1": 0.5 * (math.sqrt(1.0 - c ** N) + math.sqrt(1.0 + c ** N)),
    }


def _g_branches(c0: float, c1: float, N: int) -> dict[str, float]:
    r2 = 1.0 - c0 * c0 - c1 * c1
    r = math.sqrt(r2)
    XN = (1.0 - 3.0 * c0 * c0 * c1 * c1 / r2) ** (N - 1)
    return {
        "g1": math.sqrt(XN * ((c0 + c1 + r) ** 2 - 3.0) + 3.0) / math.sqrt(3.0),
        "g2": (math.sqrt(4.0 + (3.0 * (c0 + c1) ** 2 - 4.0) * XN) + math.sqrt(3.0 * r2 * XN - XN + 1.0)) / 3.0,
    }


def _h_branches(d0: float, N: int) -> dict[str, float]:
    Y = 1.0 - 3.0 * d0 * d0
    s = d0 * math.sqrt(2.0 - 2.0 * d0 * d0)
    h = math.sqrt((1.0 - d0 * d0) / 2.0)
    return {
        "h0": (math.sqrt(25.0 - (1.0 - 12.0 * s + 21.0 * d0 * d0) * Y ** (N - 1)) + math.sqrt(max(1.0 - Y ** N, 0.0))) / 6.0,
        "h1": math.sqrt(3.0 - 2.0 * (h - d0) ** 2 * Y ** (N - 1)) / math.sqrt(3.0),
        "h2": (math.sqrt(8.0 + (6.0 * s + 3.0 * d0 * d0 - 5.0) * Y ** (N - 1)) + math.sqrt(2.0 + Y ** N)) / (3.0 * math.sqrt(2.0)),
        "h3": (math.sqrt(max(1.0 - Y ** N, 0.0)) + math.sqrt(2.0) * math.sqrt(2.0 + Y ** N)) / 3.0,
    }


# which candidate each setting's outcome sum equals
SETTING_BRANCH = {
    "ghz1": {(0,): "f0", (1,): "f0", (2,): "f1"},
    "ghz2": {
        (0, 0): "f0", (0, 1): "f0", (1, 0): "f0", (1, 1): "f0",
        (0, 2): "f1", (1, 2): "f1", (2, 0): "f1", (2, 1): "f1", (2, 2): "f1",
    },
    "w1": {(0,): "g1", (1,): "g1", (2,): "g2"},
    "w2": {
        (0, 0): "h0", (1, 1): "h0", (0, 1): "h1", (1, 0): "h1",
        (0, 2): "h2", (2, 0): "h2", (1, 2): "h2", (2, 1): "h2", (2, 2): "h3",
    },
}

CLAIMED_MIN = {"ghz1": "f0", "ghz2": "f0", "w1": "g1", "w2": "h1"}

BRANCH_TOL = 1e-12


class BranchOrderingError(AssertionError):
    """A claimed minimum branch is not the minimum."""


@dataclass(frozen=True)
class BranchDiagnostic:
    variant: str
    N: int
    candidates: Mapping[str, float]
    claimed_min: str
    argmin: str
    holds: bool

    def as_dict(self) -> dict:
        return {"variant": self.variant, "N": self.N, "candidates": dict(self.candidates),
                "claimed_min": self.claimed_min, "argmin": self.argmin, "holds": self.holds}


def branch_candidates(family: str, params: Mapping[str, float], scenario: str, N: int) -> dict[str, float]:
    N = _check_copies(N)
    v = _variant(family, scenario)
    p = _params(family, params)
    if v in ("ghz1", "ghz2"):
        return _f_branches(p["theta"], N)
    if v == "w1":
        return _g_branches(p["c0"], p["c1"], N)
    return _h_branches(p["d0"], N)


def min_branch_check(family: str, params: Mapping[str, float], scenario: str, N: int, strict: bool = True) -> BranchDiagnostic:
    """Evaluate every candidate and check the claimed minimum branch.

    Raises ``BranchOrderingError`` naming the offending branch when another
    candidate falls below the claimed minimum (unless ``strict`` is False).
    """
    v = _variant(family, scenario)
    cand = branch_candidates(family, params, scenario, N)
    claimed = CLAIMED_MIN[v]
    arg = min(cand, key=lambda k: cand[k])
    beaten = [k for k, val in cand.items() if val < cand[claimed] - BRANCH_TOL]
    diag = BranchDiagnostic(v, int(N), cand, claimed, arg, not beaten)
    if beaten and strict:
        raise BranchOrderingError(f"{v} at N={N}: branch {beaten[0]}={cand[beaten[0]]!r} below {claimed}={cand[claimed]!r}")
    return diag


# N_min


@dataclass(frozen=True)
class NminQuery:
    family: str
    params: Mapping[str, float]
    scenario: str
    epsilon: float = 1e-4
    convention: str = "one_minus_F"

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")


def _meets(F: float, q: NminQuery) -> bool:
    if q.convention == "one_minus_F":
        return 1.0 - F <= q.epsilon
    return 1.0 - F * F <= q.epsilon


def n_min(query: NminQuery) -> int:
    """Smallest N >= 2 whose closed-form fidelity meets the tolerance."""
    kappa, rate = decay_parameters(query.family, query.params, query.scenario)
    # F^2 >= target_sq  <=>  kappa * rate**(N-1) <= 1 - target_sq
    target_sq = (1.0 - query.epsilon) ** 2 if query.convention == "one_minus_F" else 1.0 - query.epsilon
    slack = 1.0 - target_sq
    if kappa <= slack or rate <= 0.0:
        guess = 2
    elif rate >= 1.0:
        raise ValueError("fidelity does not improve with N for these parameters")
    else:
        guess = max(2, 1 + math.ceil(math.log(slack / kappa) / math.log(rate)))
    fid = lambda n: closed_form_fidelity(query.family, query.params, query.scenario, n)
    n = guess
    while not _meets(fid(n), query):
        n += 1
    while n > 2 and _meets(fid(n - 1), query):
        n -= 1
    return n


# CSV output


def format_number(v) -> str:
    if isinstance(v, float):
        return format(v, f".{CSV_DIGITS}g")
    return str(v)


def write_csv(rows: Iterable[Mapping], columns: Sequence[str], stream=None) -> str:
    """Write rows with fixed columns; floats use 12 significant digits."""
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_number(row[c]) for c in columns])
    return buf.getvalue() if stream is None else ""


FIDELITY_COLUMNS = ("scenario", "family", "param1", "param2", "N", "fidelity_closed", "fidelity_direct", "p_success")
NMIN_COLUMNS = ("scenario", "family", "param1", "param2", "epsilon", "convention", "n_min")
