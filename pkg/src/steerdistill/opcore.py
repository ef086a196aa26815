"""Dense complex operator algebra on qubit registers.

All operators are ``numpy`` complex arrays. Multi-qubit operators use the
ordering A (x) B (x) C with qubit 0 as the most significant index.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_CLIP_TOL = 1e-10
PSD_FAIL_TOL = 1e-8


class StructuralError(ValueError):
    """Operator shape is not compatible with the requested operation."""


class ContractViolation(ValueError):
    """Input breaks a documented precondition (e.g. non-Hermitian)."""


class NotPSDError(ValueError):
    """Operator has an eigenvalue below the negative tolerance."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"operator is not PSD: min eigenvalue {min_eigenvalue:.3e} < -{PSD_FAIL_TOL:g}")
        self.min_eigenvalue = min_eigenvalue


def as_operator(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise StructuralError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def frozen(m) -> np.ndarray:
    """Return a read-only complex copy of ``m``."""
    arr = np.array(m, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


def kron(a, b, *more) -> np.ndarray:
    """Kronecker product of two or more operators (or kets)."""
    return reduce(np.kron, (np.asarray(x, dtype=np.complex128) for x in (a, b, *more)))


def ket(*amplitudes) -> np.ndarray:
    return np.asarray(amplitudes, dtype=np.complex128)


def projector(v, weight: float = 1.0) -> np.ndarray:
    """``weight * |v><v|`` for a column vector ``v`` (not normalized here)."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return weight * np.outer(v, v.conj())


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise StructuralError(f"dimension {dim} is not a power of two")
    return n


def partial_trace(m, keep: Iterable[int]) -> np.ndarray:
    """Trace out every qubit not listed in ``keep``.

    ``keep`` holds qubit indices (0 = most significant). The kept qubits stay
    in ascending order in the result.
    """
    m = as_operator(m)
    if m.shape[0] != m.shape[1]:
        raise StructuralError(f"partial trace needs a square matrix, got {m.shape}")
    n = num_qubits(m.shape[0])
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise StructuralError("keep must name at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise StructuralError(f"qubit index out of range for {n} qubits: {keep}")
    drop = [q for q in range(n) if q not in keep]
    t = m.reshape([2] * (2 * n))
    # trace from the highest index down so earlier axis numbers stay valid
    for offset, q in enumerate(sorted(drop, reverse=True)):
        width = n - offset
        t = np.trace(t, axis1=q, axis2=q + width)
    d = 1 << len(keep)
    return t.reshape(d, d)


def hermiticity_residual(m) -> float:
    m = as_operator(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix."""
    m = as_operator(m)
    if m.shape[0] != m.shape[1]:
        raise StructuralError(f"eigendecomposition needs a square matrix, got {m.shape}")
    res = hermiticity_residual(m)
    if res > HERMITIAN_TOL:
        raise ContractViolation(f"matrix is not Hermitian (residual {res:.3e})")
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return vals, vecs


def _clipped_spectrum(m) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = hermitian_eig(m)
    lo = float(vals[0]) if vals.size else 0.0
    if lo < -PSD_FAIL_TOL:
        raise NotPSDError(lo)
    # relative floor removes rounding noise on rank-deficient inputs
    scale = max(float(np.max(np.abs(vals))) if vals.size else 0.0, 1e-300)
    floor = max(10 * len(vals) * np.finfo(float).eps * scale, 0.0)
    vals = np.where(vals <= floor, 0.0, vals)
    return vals, vecs


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a PSD matrix; small negative eigenvalues are clipped."""
    vals, vecs = _clipped_spectrum(m)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def min_eigenvalue(m) -> float:
    return float(hermitian_eig(m)[0][0])


def rank_one_factor(m, tol: float = 1e-12) -> np.ndarray | None:
    """Return ``v`` with ``m = |v><v|`` if ``m`` is numerically rank one, else None."""
    vals, vecs = _clipped_spectrum(m)
    top = float(vals[-1])
    if top <= 0.0:
        return None
    if vals.size > 1 and float(vals[-2]) > tol * top:
        return None
    return np.sqrt(top) * vecs[:, -1]


def uhlmann_fidelity(a, b) -> float:
    """Root fidelity ``Tr sqrt(sqrt(A) B sqrt(A))`` of two PSD operators.

    Computed as the nuclear norm of ``sqrt(A) sqrt(B)``, which is the same
    quantity and is better conditioned than taking a third square root.
    A rank-one ``A = |v><v|`` uses ``sqrt(<v|B|v>)`` directly.
    """
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise StructuralError(f"dimension mismatch: {a.shape} vs {b.shape}")
    v = rank_one_factor(a)
    if v is not None:
        _clipped_spectrum(b)
        return fidelity_rank_one(v, b)
    if not np.any(a):
        _clipped_spectrum(b)
        return 0.0
    sa = psd_sqrt(a)
    sb = psd_sqrt(b)
    return float(np.linalg.svd(sa @ sb, compute_uv=False).sum())


def fidelity_rank_one(v, b) -> float:
    """Fidelity of ``|v><v|`` (unnormalized ``v``) against PSD ``b``."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    overlap = float(np.real(np.vdot(v, as_operator(b) @ v)))
    return float(np.sqrt(max(overlap, 0.0)))


def embed(op, position: int, n: int) -> np.ndarray:
    """Place a single-qubit ``op`` at ``position`` within an ``n``-qubit identity."""
    eye = np.eye(2, dtype=np.complex128)
    factors: Sequence = [op if q == position else eye for q in range(n)]
    return reduce(np.kron, factors) if n > 1 else as_operator(op)
