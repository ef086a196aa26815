"""Three-qubit state families and Pauli observables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .opcore import frozen, projector

SQRT3_INV = 1.0 / math.sqrt(3.0)
NORM_TOL = 1e-12

FAMILIES = ("gghz", "ghz", "gw", "w", "opgw", "explicit")


class DomainError(ValueError):
    """A parameter lies outside its family's domain.

    ``parameter`` names the offending parameter and ``bound`` states the
    violated constraint as text, e.g. ``"0 < theta < pi/4"``.
    """

    def __init__(self, parameter: str, value: float, bound: str):
        super().__init__(f"{parameter}={value!r} violates {bound}")
        self.parameter = parameter
        self.value = value
        self.bound = bound


@dataclass(frozen=True)
class TripartiteState:
    amplitudes: np.ndarray
    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        amps = frozen(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape != (8,):
            raise ValueError(f"need 8 amplitudes, got {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: sum |amp|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"


def _basis(index: int) -> np.ndarray:
    v = np.zeros(8, dtype=np.complex128)
    v[index] = 1.0
    return v


def gghz(theta: float) -> TripartiteState:
    """cos(theta)|000> + sin(theta)|111>, 0 < theta < pi/4."""
    theta = float(theta)
    if not (0.0 < theta < math.pi / 4):
        raise DomainError("theta", theta, "0 < theta < pi/4")
    return _gghz_unchecked(theta, "gghz")


def _gghz_unchecked(theta: float, family: str) -> TripartiteState:
    amps = math.cos(theta) * _basis(0b000) + math.sin(theta) * _basis(0b111)
    params = {"theta": theta} if family == "gghz" else {}
    return TripartiteState(amps, family, params)


def ghz() -> TripartiteState:
    return _gghz_unchecked(math.pi / 4, "ghz")


def gw(c0: float, c1: float) -> TripartiteState:
    """c0|001> + c1|010> + sqrt(1-c0^2-c1^2)|100>."""
    c0, c1 = float(c0), float(c1)
    if not (0.0 < c0 <= SQRT3_INV):
        raise DomainError("c0", c0, "0 < c0 <= 1/sqrt(3)")
    if not (0.0 < c1 < SQRT3_INV):
        raise DomainError("c1", c1, "0 < c1 < 1/sqrt(3)")
    return _gw_unchecked(c0, c1, "gw")


def _gw_unchecked(c0: float, c1: float, family: str) -> TripartiteState:
    r = math.sqrt(max(1.0 - c0 * c0 - c1 * c1, 0.0))
    amps = c0 * _basis(0b001) + c1 * _basis(0b010) + r * _basis(0b100)
    params = {"c0": c0, "c1": c1} if family == "gw" else {}
    return TripartiteState(amps, family, params)


def w() -> TripartiteState:
    return _gw_unchecked(SQRT3_INV, SQRT3_INV, "w")


def opgw(d0: float) -> TripartiteState:
    """d0|001> + sqrt((1-d0^2)/2)(|010> + |100>), 0 < d0 < 1/sqrt(3)."""
    d0 = float(d0)
    if not (0.0 < d0 < SQRT3_INV):
        raise DomainError("d0", d0, "0 < d0 < 1/sqrt(3)")
    r = math.sqrt((1.0 - d0 * d0) / 2.0)
    amps = d0 * _basis(0b001) + r * (_basis(0b010) + _basis(0b100))
    return TripartiteState(amps, "opgw", {"d0": d0})


def explicit(amplitudes, label: str = "explicit") -> TripartiteState:
    return TripartiteState(np.asarray(amplitudes, dtype=np.complex128), "explicit", {})


def make_state(family: str, **params: float) -> TripartiteState:
    """Build a state by family name: gghz(theta), gw(c0, c1), opgw(d0), ghz, w."""
    family = family.lower()
    builders = {
        "gghz": lambda: gghz(params["theta"]),
        "ghz": ghz,
        "gw": lambda: gw(params["c0"], params["c1"]),
        "w": w,
        "opgw": lambda: opgw(params["d0"]),
        "explicit": lambda: explicit(params["amplitudes"]),
    }
    if family not in builders:
        raise ValueError(f"unknown state family {family!r}; expected one of {FAMILIES}")
    try:
        return builders[family]()
    except KeyError as exc:
        raise ValueError(f"family {family!r} needs parameter {exc.args[0]!r}") from None


def density(state: TripartiteState) -> np.ndarray:
    return projector(state.amplitudes)


@dataclass(frozen=True)
class DichotomicObservable:
    """A +/-1 valued qubit observable with effects M_a = (1 + (-1)^a O) / 2."""

    name: str
    operator: np.ndarray

    def __post_init__(self):
        op = frozen(self.operator)
        if op.shape != (2, 2):
            raise ValueError("dichotomic observables act on one qubit")
        if np.max(np.abs(op @ op - np.eye(2))) > 1e-10:
            raise ValueError(f"{self.name}: O^2 != 1")
        object.__setattr__(self, "operator", op)

    @property
    def effects(self) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(2, dtype=np.complex128)
        return (0.5 * (eye + self.operator), 0.5 * (eye - self.operator))


PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli(which: str) -> DichotomicObservable:
    which = which.upper()
    if which not in ("X", "Y", "Z"):
        raise ValueError(f"unknown Pauli {which!r}")
    return DichotomicObservable(which, PAULI_MATRICES[which])


def xyz() -> tuple[DichotomicObservable, DichotomicObservable, DichotomicObservable]:
    """Settings 0, 1, 2 mapped to X, Y, Z."""
    return pauli("X"), pauli("Y"), pauli("Z")
