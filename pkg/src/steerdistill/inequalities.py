"""Correlators and the four genuine tripartite steering witnesses.

Witness values are linear in the assemblage; a negative value flags genuine
tripartite steering. Untrusted settings A1, A2, A3 (and B1, B2, B3) map to
settings 0, 1, 2, i.e. X, Y, Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .assemblage import OUTCOMES, Assemblage1SDI, Assemblage2SDI, reduced_state
from .opcore import kron
from .states import PAULI_MATRICES


@dataclass(frozen=True)
class CorrelatorSpec:
    """One bracketed term: coefficient * <A_x [B_y] T>.

    ``x``/``y`` are 0-based untrusted settings (None when absent); ``trusted``
    is a string of Pauli letters for the trusted qubits, ``I`` for identity.
    """

    coefficient: float
    trusted: str
    x: Optional[int] = None
    y: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        for s in (self.x, self.y):
            if s is not None and s not in (0, 1, 2):
                raise ValueError(f"setting index {s} outside 0..2")
        if any(ch not in PAULI_MATRICES for ch in self.trusted):
            raise ValueError(f"bad trusted operator {self.trusted!r}")

    @property
    def name(self) -> str:
        parts = []
        if self.x is not None:
            parts.append(f"A{self.x + 1}")
        if self.y is not None:
            parts.append(f"B{self.y + 1}")
        parties = "BC" if len(self.trusted) == 2 else "C"
        for p, ch in zip(parties, self.trusted):
            if ch != "I":
                parts.append(f"{ch}_{p}" if len(self.trusted) == 2 else ch)
        return "<" + " ".join(parts) + ">" if parts else "<1>"

    def operator(self) -> np.ndarray:
        ops = [PAULI_MATRICES[ch] for ch in self.trusted]
        return ops[0] if len(ops) == 1 else kron(*ops)


@dataclass(frozen=True)
class TermValue:
    name: str
    coefficient: float
    correlator: float

    @property
    def contribution(self) -> float:
        return self.coefficient * self.correlator


@dataclass(frozen=True)
class InequalityValue:
    name: str
    value: float
    terms: tuple[TermValue, ...] = ()
    constant: float = 1.0

    @property
    def violated(self) -> bool:
        return self.value < 0.0

    def as_dict(self) -> dict:
        return {
            "inequality": self.name,
            "value": self.value,
            "violated": self.violated,
            "constant": self.constant,
            "terms": [
                {"term": t.name, "coefficient": t.coefficient, "correlator": t.correlator, "contribution": t.contribution}
                for t in self.terms
            ],
        }


def correlator_1sdi(assemblage: Assemblage1SDI, x: Optional[int], T) -> float:
    T = np.asarray(T, dtype=np.complex128)
    if x is None:
        return float(np.trace(T @ reduced_state(assemblage)).real)
    return float(sum((-1) ** a * np.trace(T @ assemblage.elements[(x, a)]).real for a in OUTCOMES))


def correlator_2sdi(assemblage: Assemblage2SDI, x: Optional[int], y: Optional[int], T) -> float:
    T = np.asarray(T, dtype=np.complex128)
    xs = 0 if x is None else x
    ys = 0 if y is None else y
    total = 0.0
    for a in OUTCOMES:
        for b in OUTCOMES:
            sign = (-1) ** (a * (x is not None) + b * (y is not None))
            total += sign * np.trace(T @ assemblage.elements[(xs, ys, a, b)]).real
    return float(total)


def _evaluate(name: str, terms: Sequence[CorrelatorSpec], assemblage) -> InequalityValue:
    vals = []
    for t in terms:
        if isinstance(assemblage, Assemblage1SDI):
            if t.y is not None:
                raise ValueError(f"{name}: one-sided assemblage has no second untrusted party")
            c = correlator_1sdi(assemblage, t.x, t.operator())
        else:
            c = correlator_2sdi(assemblage, t.x, t.y, t.operator())
        vals.append(TermValue(t.name, t.coefficient, c))
    value = 1.0 + sum(v.contribution for v in vals)
    return InequalityValue(name, float(value), tuple(vals))


def _require(assemblage, cls, name):
    if not isinstance(assemblage, cls):
        raise TypeError(f"{name} needs a {cls.scenario} assemblage, got {type(assemblage).__name__}")


def _T(c, trusted, x=None, y=None):
    return CorrelatorSpec(c, trusted, x, y)


A1, A2, A3 = 0, 1, 2
B1, B2, B3 = 0, 1, 2
THIRD = 1.0 / 3.0

G1_TERMS = (
    _T(0.1547, "ZZ"),
    _T(-THIRD, "ZI", A3),
    _T(-THIRD, "IZ", A3),
    _T(-THIRD, "XX", A1),
    _T(+THIRD, "YY", A1),
    _T(+THIRD, "XY", A2),
    _T(+THIRD, "YX", A2),
)

G2_ALPHA = 0.183
G2_BETA = 0.258
G2_TERMS = (
    _T(-G2_ALPHA, "I", A3, B3),
    _T(-G2_ALPHA, "Z", A3),
    _T(-G2_ALPHA, "Z", None, B3),
    _T(-G2_BETA, "X", A1, B1),
    _T(+G2_BETA, "Y", A1, B2),
    _T(+G2_BETA, "Y", A2, B1),
    _T(+G2_BETA, "X", A2, B2),
)

# The last coefficient multiplies all eight single-setting X/Y terms; see the
# decisions ledger for why this grouping was chosen.
W1_TERMS = (
    _T(0.4405, "ZI"),
    _T(0.4405, "IZ"),
    _T(-0.0037, "ZZ"),
    _T(-0.1570, "XX"),
    _T(-0.1570, "YY"),
    _T(-0.1570, "XX", A3),
    _T(-0.1570, "YY", A3),
    _T(0.2424, "II", A3),
    _T(0.2424, "ZZ", A3),
    _T(0.1848, "ZI", A3),
    _T(0.1848, "IZ", A3),
    _T(-0.2533, "XI", A1),
    _T(-0.2533, "IX", A1),
    _T(-0.2533, "YI", A2),
    _T(-0.2533, "IY", A2),
    _T(-0.2533, "XZ", A1),
    _T(-0.2533, "ZX", A1),
    _T(-0.2533, "YZ", A2),
    _T(-0.2533, "ZY", A2),
)

W2_TERMS = (
    _T(0.2517, "I", A3),
    _T(0.2517, "I", None, B3),
    _T(0.3520, "Z"),
    _T(-0.1112, "X", A1),
    _T(-0.1112, "Y", A2),
    _T(-0.1112, "X", None, B1),
    _T(-0.1112, "Y", None, B2),
    _T(0.1296, "Z", A3),
    _T(0.1296, "Z", None, B3),
    _T(-0.1943, "I", A1, B1),
    _T(-0.1943, "I", A2, B2),
    _T(0.2277, "I", A3, B3),
    _T(-0.1590, "Z", A1, B1),
    _T(-0.1590, "Z", A2, B2),
    _T(0.2228, "Z", A3, B3),
    _T(-0.2298, "X", A1, B3),
    _T(-0.2298, "Y", A2, B3),
    _T(-0.2298, "X", A3, B1),
    _T(-0.2298, "Y", A3, B2),
)

TERMS = {"g1": G1_TERMS, "g2": G2_TERMS, "w1": W1_TERMS, "w2": W2_TERMS}
SCENARIO = {"g1": "1sdi", "g2": "2sdi", "w1": "1sdi", "w2": "2sdi"}


def evaluate_G1(assemblage: Assemblage1SDI) -> InequalityValue:
    _require(assemblage, Assemblage1SDI, "G1")
    return _evaluate("G1", G1_TERMS, assemblage)


def evaluate_G2(assemblage: Assemblage2SDI) -> InequalityValue:
    _require(assemblage, Assemblage2SDI, "G2")
    return _evaluate("G2", G2_TERMS, assemblage)


def evaluate_W1(assemblage: Assemblage1SDI) -> InequalityValue:
    _require(assemblage, Assemblage1SDI, "W1")
    return _evaluate("W1", W1_TERMS, assemblage)


def evaluate_W2(assemblage: Assemblage2SDI) -> InequalityValue:
    _require(assemblage, Assemblage2SDI, "W2")
    return _evaluate("W2", W2_TERMS, assemblage)


EVALUATORS = {"g1": evaluate_G1, "g2": evaluate_G2, "w1": evaluate_W1, "w2": evaluate_W2}


def evaluate(name: str, assemblage) -> InequalityValue:
    try:
        fn = EVALUATORS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown inequality {name!r}; expected one of {sorted(EVALUATORS)}") from None
    return fn(assemblage)
