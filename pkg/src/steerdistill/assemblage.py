"""Assemblages for the one- and two-sided device-independent scenarios.

An assemblage maps (setting, outcome) labels of the untrusted parties to the
unnormalized conditional operator left on the trusted side. Element keys are
``(x, a)`` for the one-sided case (4x4 operators on B (x) C) and
``(x, y, a, b)`` for the two-sided case (2x2 operators on C). Settings
0, 1, 2 stand for X, Y, Z; outcome 0 is the +1 eigenvalue.

Two independent construction paths exist: ``build_1sdi``/``build_2sdi``
measure a state and take partial traces, while ``closed_form_1sdi`` and
``closed_form_2sdi`` write the components down from their analytic lists.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Mapping, Sequence

import numpy as np

from . import states as st
from .opcore import frozen, hermiticity_residual, kron, partial_trace, projector

SCHEMA_VERSION = 1

SETTINGS = (0, 1, 2)
OUTCOMES = (0, 1)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
NO_SIGNALING_TOL = 1e-10
TRACE_TOL = 1e-10
INCONSISTENCY_TOL = 1e-8


class AssemblageInvariantError(ValueError):
    """A constructed assemblage breaks positivity, Hermiticity, trace or no-signaling."""


class InconsistencyError(ValueError):
    """Outcome sums differ between settings by more than the allowed residual."""


@dataclass(frozen=True)
class InvariantReport:
    hermiticity_residual: float
    min_eigenvalue: float
    no_signaling_residual: float
    trace_error: float

    @property
    def ok(self) -> bool:
        return (
            self.hermiticity_residual <= HERMITIAN_TOL
            and self.min_eigenvalue >= -PSD_TOL
            and self.no_signaling_residual <= NO_SIGNALING_TOL
            and self.trace_error <= TRACE_TOL
        )

    def failures(self) -> list[str]:
        out = []
        if self.hermiticity_residual > HERMITIAN_TOL:
            out.append(f"hermiticity residual {self.hermiticity_residual:.3e} > {HERMITIAN_TOL:g}")
        if self.min_eigenvalue < -PSD_TOL:
            out.append(f"min eigenvalue {self.min_eigenvalue:.3e} < -{PSD_TOL:g}")
        if self.no_signaling_residual > NO_SIGNALING_TOL:
            out.append(f"no-signaling residual {self.no_signaling_residual:.3e} > {NO_SIGNALING_TOL:g}")
        if self.trace_error > TRACE_TOL:
            out.append(f"trace error {self.trace_error:.3e} > {TRACE_TOL:g}")
        return out

    def as_dict(self) -> dict:
        return {
            "hermiticity_residual": self.hermiticity_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "no_signaling_residual": self.no_signaling_residual,
            "trace_error": self.trace_error,
            "ok": self.ok,
        }


def _max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


@dataclass(frozen=True)
class _Assemblage:
    elements: Mapping[tuple, np.ndarray]
    label: str = ""
    validate: bool = field(default=True, compare=False, repr=False)

    scenario: ClassVar[str] = ""
    n_parties: ClassVar[int] = 1
    dim: ClassVar[int] = 0

    def __post_init__(self):
        keys = set(self.expected_keys())
        given = {tuple(int(i) for i in k): v for k, v in dict(self.elements).items()}
        if set(given) != keys:
            missing = sorted(keys - set(given))
            extra = sorted(set(given) - keys)
            raise ValueError(f"{self.scenario} element keys wrong: missing {missing}, unexpected {extra}")
        elems = {}
        for k in sorted(keys):
            m = frozen(given[k])
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"element {k} has shape {m.shape}, expected {(self.dim, self.dim)}")
            elems[k] = m
        object.__setattr__(self, "elements", elems)
        if self.validate:
            report = self.invariants()
            if not report.ok:
                raise AssemblageInvariantError(f"{self.label or self.scenario}: " + "; ".join(report.failures()))

    @classmethod
    def expected_keys(cls) -> list[tuple]:
        return [s + o for s in cls.settings() for o in cls.outcomes()]

    @classmethod
    def settings(cls) -> list[tuple]:
        return list(itertools.product(SETTINGS, repeat=cls.n_parties))

    @classmethod
    def outcomes(cls) -> list[tuple]:
        return list(itertools.product(OUTCOMES, repeat=cls.n_parties))

    def element(self, setting: Sequence[int], outcome: Sequence[int]) -> np.ndarray:
        return self.elements[tuple(setting) + tuple(outcome)]

    def outcome_sum(self, setting: Sequence[int]) -> np.ndarray:
        return sum(self.element(setting, o) for o in self.outcomes())

    def no_signaling_residual(self) -> float:
        sums = [self.outcome_sum(s) for s in self.settings()]
        return max(_max_abs(s - sums[0]) for s in sums)

    def invariants(self) -> InvariantReport:
        herm = max(hermiticity_residual(m) for m in self.elements.values())
        lo = min(float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]) for m in self.elements.values())
        trace_err = max(abs(float(np.trace(self.outcome_sum(s)).real) - 1.0) for s in self.settings())
        return InvariantReport(herm, lo, self.no_signaling_residual(), trace_err)

    def map_elements(self, fn, label: str | None = None, validate: bool = True):
        """New assemblage of the same type with ``fn`` applied to every element."""
        return type(self)({k: fn(v) for k, v in self.elements.items()}, label if label is not None else self.label, validate)

    def max_deviation(self, other: "_Assemblage") -> float:
        _require_same_type(self, other)
        return max(_max_abs(self.elements[k] - other.elements[k]) for k in self.elements)

    def probabilities(self) -> dict[tuple, float]:
        return {k: float(np.trace(v).real) for k, v in self.elements.items()}

    # serialization

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "assemblage",
            "scenario": self.scenario,
            "label": self.label,
            "n_settings": len(SETTINGS),
            "n_outcomes": len(OUTCOMES),
            "parties": self.n_parties,
            "dim": self.dim,
            "elements": {_key_str(k, self.n_parties): _flatten(v) for k, v in self.elements.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class Assemblage1SDI(_Assemblage):
    """One untrusted party (Alice); elements are 4x4 operators on B (x) C."""

    scenario: ClassVar[str] = "1sdi"
    n_parties: ClassVar[int] = 1
    dim: ClassVar[int] = 4


class Assemblage2SDI(_Assemblage):
    """Two untrusted parties (Alice, Bob); elements are 2x2 operators on C."""

    scenario: ClassVar[str] = "2sdi"
    n_parties: ClassVar[int] = 2
    dim: ClassVar[int] = 2

    def no_signaling_residual(self) -> float:
        res = super().no_signaling_residual()
        for x in SETTINGS:
            for a in OUTCOMES:
                marg = [sum(self.elements[(x, y, a, b)] for b in OUTCOMES) for y in SETTINGS]
                res = max(res, max(_max_abs(m - marg[0]) for m in marg))
        for y in SETTINGS:
            for b in OUTCOMES:
                marg = [sum(self.elements[(x, y, a, b)] for a in OUTCOMES) for x in SETTINGS]
                res = max(res, max(_max_abs(m - marg[0]) for m in marg))
        return res


Assemblage = _Assemblage


def _require_same_type(a, b):
    if type(a) is not type(b):
        raise ValueError(f"scenario mismatch: {a.scenario} vs {b.scenario}")


def _key_str(k: tuple, n: int) -> str:
    outs, sets = k[n:], k[:n]
    return ",".join(map(str, outs)) + "|" + ",".join(map(str, sets))


def _parse_key(s: str, n: int) -> tuple:
    outs, sets = s.split("|")
    o = tuple(int(t) for t in outs.split(","))
    x = tuple(int(t) for t in sets.split(","))
    if len(o) != n or len(x) != n:
        raise ValueError(f"bad element key {s!r}")
    return x + o


def _flatten(m: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(-1)]


def _unflatten(entries, dim: int) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return arr.reshape(dim, dim)


def from_dict(doc: Mapping) -> _Assemblage:
    if doc.get("kind", "assemblage") != "assemblage":
        raise ValueError(f"not an assemblage document: kind={doc.get('kind')!r}")
    if int(doc.get("schema_version", -1)) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    cls = {"1sdi": Assemblage1SDI, "2sdi": Assemblage2SDI}[doc["scenario"]]
    elems = {_parse_key(k, cls.n_parties): _unflatten(v, cls.dim) for k, v in doc["elements"].items()}
    return cls(elems, doc.get("label", ""))


def from_json(text: str) -> _Assemblage:
    return from_dict(json.loads(text))


def reduced_state(assemblage: _Assemblage) -> np.ndarray:
    """Outcome-summed operator (rho^BC or rho^C); identical for every setting."""
    res = assemblage.no_signaling_residual()
    if res > INCONSISTENCY_TOL:
        raise InconsistencyError(f"no-signaling residual {res:.3e} exceeds {INCONSISTENCY_TOL:g}")
    return assemblage.outcome_sum(assemblage.settings()[0])


def mix(weights: Sequence[float], assemblages: Sequence[_Assemblage], label: str = "") -> _Assemblage:
    """Elementwise convex combination ``sum_i w_i * assemblage_i``."""
    if len(weights) != len(assemblages) or not assemblages:
        raise ValueError("need one weight per assemblage")
    first = assemblages[0]
    for other in assemblages[1:]:
        _require_same_type(first, other)
    elems = {k: sum(w * a.elements[k] for w, a in zip(weights, assemblages)) for k in first.elements}
    return type(first)(elems, label)


# tomographic path


def build_1sdi(state: st.TripartiteState, alice_obs: Sequence[st.DichotomicObservable] | None = None) -> Assemblage1SDI:
    """sigma_{a|x} = Tr_A[(M_{a|x} (x) 1 (x) 1) rho]."""
    alice_obs = alice_obs or st.xyz()
    rho = st.density(state)
    eye4 = np.eye(4, dtype=np.complex128)
    elems = {}
    for x, obs in zip(SETTINGS, alice_obs):
        for a, eff in zip(OUTCOMES, obs.effects):
            elems[(x, a)] = partial_trace(kron(eff, eye4) @ rho, keep=(1, 2))
    return Assemblage1SDI(elems, f"{state.label}:tomographic")


def build_2sdi(
    state: st.TripartiteState,
    alice_obs: Sequence[st.DichotomicObservable] | None = None,
    bob_obs: Sequence[st.DichotomicObservable] | None = None,
) -> Assemblage2SDI:
    """sigma_{ab|xy} = Tr_AB[(M_{a|x} (x) M_{b|y} (x) 1) rho]."""
    alice_obs = alice_obs or st.xyz()
    bob_obs = bob_obs or st.xyz()
    rho = st.density(state)
    eye2 = np.eye(2, dtype=np.complex128)
    elems = {}
    for x, ao in zip(SETTINGS, alice_obs):
        for y, bo in zip(SETTINGS, bob_obs):
            for a, ea in zip(OUTCOMES, ao.effects):
                for b, eb in zip(OUTCOMES, bo.effects):
                    m = partial_trace(kron(ea, eb, eye2) @ rho, keep=(2,))
                    if np.max(np.abs(m)) <= 1e-15:
                        m = np.zeros((2, 2), dtype=np.complex128)
                    elems[(x, y, a, b)] = m
    return Assemblage2SDI(elems, f"{state.label}:tomographic")


# closed-form path


def _k(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=np.complex128)


KET00 = _k(1, 0, 0, 0)
KET01 = _k(0, 1, 0, 0)
KET10 = _k(0, 0, 1, 0)
KET11 = _k(0, 0, 0, 1)
KET0 = _k(1, 0)
KET1 = _k(0, 1)


def _gghz_1sdi(theta: float, label: str) -> Assemblage1SDI:
    c, s = math.cos(theta), math.sin(theta)
    t0p = c * KET00 + s * KET11
    t0m = c * KET00 - s * KET11
    t1p = c * KET00 + 1j * s * KET11
    t1m = c * KET00 - 1j * s * KET11
    elems = {
        (0, 0): projector(t0p, 0.5),
        (0, 1): projector(t0m, 0.5),
        (1, 0): projector(t1m, 0.5),
        (1, 1): projector(t1p, 0.5),
        (2, 0): projector(KET00, c * c),
        (2, 1): projector(KET11, s * s),
    }
    return Assemblage1SDI(elems, label)


def _gw_1sdi(c0: float, c1: float, label: str) -> Assemblage1SDI:
    r = math.sqrt(1.0 - c0 * c0 - c1 * c1)
    w0p = r * KET00 + c0 * KET01 + c1 * KET10
    w0m = r * KET00 - c0 * KET01 - c1 * KET10
    w1p = r * KET00 + 1j * c0 * KET01 + 1j * c1 * KET10
    w1m = r * KET00 - 1j * c0 * KET01 - 1j * c1 * KET10
    n2 = c0 * c0 + c1 * c1
    w2 = (c0 * KET01 + c1 * KET10) / math.sqrt(n2)
    elems = {
        (0, 0): projector(w0p, 0.5),
        (0, 1): projector(w0m, 0.5),
        (1, 0): projector(w1p, 0.5),
        (1, 1): projector(w1m, 0.5),
        (2, 0): projector(w2, n2),
        (2, 1): projector(KET00, 1.0 - n2),
    }
    return Assemblage1SDI(elems, label)


def _fill(table: Iterable[tuple[str, np.ndarray]], label: str) -> Assemblage2SDI:
    """Assemble a 2SDI element map from rows of ("ab|xy ab|xy ...", operator).

    Keys missing from the table are the zero-probability elements.
    """
    elems = {k: np.zeros((2, 2), dtype=np.complex128) for k in Assemblage2SDI.expected_keys()}
    seen = set()
    for keys, op in table:
        for key in keys.split():
            outs, sets = key.split("|")
            k = (int(sets[0]), int(sets[1]), int(outs[0]), int(outs[1]))
            if k in seen:
                raise ValueError(f"duplicate closed-form entry {key}")
            seen.add(k)
            elems[k] = op
    return Assemblage2SDI(elems, label)


def _gghz_2sdi(theta: float, label: str) -> Assemblage2SDI:
    c, s = math.cos(theta), math.sin(theta)
    t2p = c * KET0 + s * KET1
    t2m = c * KET0 - s * KET1
    t3p = c * KET0 + 1j * s * KET1
    t3m = c * KET0 - 1j * s * KET1
    return _fill(
        [
            ("00|00 11|00 01|11 10|11", projector(t2p, 0.25)),
            ("01|00 10|00 00|11 11|11", projector(t2m, 0.25)),
            ("00|01 11|01 00|10 11|10", projector(t3m, 0.25)),
            ("01|01 10|01 01|10 10|10", projector(t3p, 0.25)),
            ("00|02 10|02 00|12 10|12 00|20 01|20 00|21 01|21", projector(KET0, c * c / 2)),
            ("01|02 11|02 01|12 11|12 10|20 11|20 10|21 11|21", projector(KET1, s * s / 2)),
            ("00|22", projector(KET0, c * c)),
            ("11|22", projector(KET1, s * s)),
        ],
        label,
    )


def _w4(x: int, y: int, z: int, amp0: float, amp1: float) -> np.ndarray:
    return ((-1) ** x + (-1) ** y * 1j) * amp0 * KET0 + (-1) ** z * amp1 * KET1


def _opgw_2sdi(d: float, label: str) -> Assemblage2SDI:
    d2 = d * d
    h = math.sqrt((1.0 - d2) / 2.0)
    n35 = math.sqrt(2.0 / (2.0 - d2))
    n67 = math.sqrt(2.0 / (1.0 + d2))
    w3p = n35 * (math.sqrt(1 - d2) * KET0 + d / math.sqrt(2) * KET1)
    w3m = n35 * (math.sqrt(1 - d2) * KET0 - d / math.sqrt(2) * KET1)
    w5p = n35 * (math.sqrt(1 - d2) * KET0 + 1j * d / math.sqrt(2) * KET1)
    w5m = n35 * (math.sqrt(1 - d2) * KET0 - 1j * d / math.sqrt(2) * KET1)
    w6p = n67 * (h * KET0 + d * KET1)
    w6m = n67 * (h * KET0 - d * KET1)
    w7p = n67 * (h * KET0 + 1j * d * KET1)
    w7m = n67 * (h * KET0 - 1j * d * KET1)
    return _fill(
        [
            ("00|00", projector(w3p, (2 - d2) / 4)),
            ("01|00 10|00 01|11 10|11", projector(KET1, d2 / 4)),
            ("11|00", projector(w3m, (2 - d2) / 4)),
            ("00|10 00|01", projector(_w4(0, 1, 0, h, d), 0.25)),
            ("01|10 10|01", projector(_w4(0, 0, 1, h, d), 0.25)),
            ("10|10 01|01", projector(_w4(0, 0, 0, h, d), 0.25)),
            ("11|10 11|01", projector(_w4(0, 1, 1, h, d), 0.25)),
            ("01|02 11|02 01|12 11|12 10|20 11|20 10|21 11|21", projector(KET0, (1 - d2) / 4)),
            ("00|11", projector(w5p, (2 - d2) / 4)),
            ("11|11", projector(w5m, (2 - d2) / 4)),
            ("00|02 00|20", projector(w6p, (1 + d2) / 4)),
            ("10|02 01|20", projector(w6m, (1 + d2) / 4)),
            ("00|12 00|21", projector(w7p, (1 + d2) / 4)),
            ("10|12 01|21", projector(w7m, (1 + d2) / 4)),
            ("01|22 10|22", projector(KET0, (1 - d2) / 2)),
            ("00|22", projector(KET1, d2)),
        ],
        label,
    )


def _w_2sdi(label: str) -> Assemblage2SDI:
    q = 1.0 / math.sqrt(3.0)
    n35 = math.sqrt(4.0 / 5.0)
    w3p = n35 * (KET0 + 0.5 * KET1)
    w3m = n35 * (KET0 - 0.5 * KET1)
    w5p = n35 * (KET0 + 0.5j * KET1)
    w5m = n35 * (KET0 - 0.5j * KET1)
    w6p = (KET0 + KET1) / math.sqrt(2)
    w6m = (KET0 - KET1) / math.sqrt(2)
    w7p = (KET0 + 1j * KET1) / math.sqrt(2)
    w7m = (KET0 - 1j * KET1) / math.sqrt(2)
    return _fill(
        [
            ("00|00", projector(w3p, 5 / 12)),
            ("01|00 10|00 01|11 10|11", projector(KET1, 1 / 12)),
            ("11|00", projector(w3m, 5 / 12)),
            ("00|10 00|01", projector(_w4(0, 1, 0, q, q), 0.25)),
            ("01|10 10|01", projector(_w4(0, 0, 1, q, q), 0.25)),
            ("10|10 01|01", projector(_w4(0, 0, 0, q, q), 0.25)),
            ("11|10 11|01", projector(_w4(0, 1, 1, q, q), 0.25)),
            ("01|02 11|02 01|12 11|12 10|20 11|20 10|21 11|21", projector(KET0, 1 / 6)),
            ("00|11", projector(w5p, 5 / 12)),
            ("11|11", projector(w5m, 5 / 12)),
            ("00|02 00|20", projector(w6p, 1 / 3)),
            ("10|02 01|20", projector(w6m, 1 / 3)),
            ("00|12 00|21", projector(w7p, 1 / 3)),
            ("10|12 01|21", projector(w7m, 1 / 3)),
            ("01|22 10|22", projector(KET0, 1 / 3)),
            ("00|22", projector(KET1, 1 / 3)),
        ],
        label,
    )


def closed_form_1sdi(family: str, **params: float) -> Assemblage1SDI:
    """Analytic component list for gghz(theta), ghz, gw(c0, c1) or w."""
    family = family.lower()
    if family == "gghz":
        st.gghz(params["theta"])  # domain check
        return _gghz_1sdi(float(params["theta"]), f"gghz(theta={float(params['theta'])!r}):closed_form")
    if family == "ghz":
        return _gghz_1sdi(math.pi / 4, "ghz:closed_form")
    if family == "gw":
        st.gw(params["c0"], params["c1"])
        c0, c1 = float(params["c0"]), float(params["c1"])
        return _gw_1sdi(c0, c1, f"gw(c0={c0!r},c1={c1!r}):closed_form")
    if family == "w":
        return _gw_1sdi(st.SQRT3_INV, st.SQRT3_INV, "w:closed_form")
    raise ValueError(f"no one-sided closed form for family {family!r}")


def closed_form_2sdi(family: str, **params: float) -> Assemblage2SDI:
    """Analytic component list for gghz(theta), ghz, opgw(d0) or w."""
    family = family.lower()
    if family == "gghz":
        st.gghz(params["theta"])
        return _gghz_2sdi(float(params["theta"]), f"gghz(theta={float(params['theta'])!r}):closed_form")
    if family == "ghz":
        return _gghz_2sdi(math.pi / 4, "ghz:closed_form")
    if family == "opgw":
        st.opgw(params["d0"])
        d0 = float(params["d0"])
        return _opgw_2sdi(d0, f"opgw(d0={d0!r}):closed_form")
    if family == "w":
        return _w_2sdi("w:closed_form")
    raise ValueError(f"no two-sided closed form for family {family!r}")


def build(scenario: str, state: st.TripartiteState) -> _Assemblage:
    scenario = scenario.lower()
    if scenario == "1sdi":
        return build_1sdi(state)
    if scenario == "2sdi":
        return build_2sdi(state)
    raise ValueError(f"unknown scenario {scenario!r}; expected 1sdi or 2sdi")


def closed_form(scenario: str, family: str, **params: float) -> _Assemblage:
    scenario = scenario.lower()
    if scenario == "1sdi":
        return closed_form_1sdi(family, **params)
    if scenario == "2sdi":
        return closed_form_2sdi(family, **params)
    raise ValueError(f"unknown scenario {scenario!r}; expected 1sdi or 2sdi")
