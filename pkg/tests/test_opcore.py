import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hst
from hypothesis.extra.numpy import arrays

from steerdistill import states as st
from steerdistill.assemblage import build_1sdi
from steerdistill.opcore import (
    ContractViolation,
    NotPSDError,
    StructuralError,
    fidelity_rank_one,
    hermitian_eig,
    kron,
    partial_trace,
    projector,
    psd_sqrt,
    uhlmann_fidelity,
)

X = st.PAULI_MATRICES["X"]
Y = st.PAULI_MATRICES["Y"]
Z = st.PAULI_MATRICES["Z"]
I2 = np.eye(2)

finite = hst.floats(-2, 2, allow_nan=False)
complex2x2 = arrays(np.float64, (2, 2, 2), elements=finite).map(lambda a: a[0] + 1j * a[1])


def herm(dim):
    return arrays(np.float64, (2, dim, dim), elements=finite).map(lambda a: (a[0] + 1j * a[1]) + (a[0] + 1j * a[1]).conj().T)


def psd(dim, rank=None):
    rank = rank or dim
    return arrays(np.float64, (2, rank, dim), elements=finite).map(lambda a: (a[0] + 1j * a[1]).conj().T @ (a[0] + 1j * a[1]))


def test_kron_examples():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert np.allclose(kron(Z, Z), np.diag([1, -1, -1, 1]))
    ket11 = np.array([0, 0, 0, 1])
    assert np.allclose(kron(X, Y) @ ket11, [-1j, 0, 0, 0])


@given(complex2x2, complex2x2, complex2x2)
def test_kron_associative(a, b, c):
    assert np.max(np.abs(kron(kron(a, b), c) - kron(a, kron(b, c)))) <= 1e-12


def test_partial_trace_examples():
    rho000 = projector(np.eye(8)[0])
    assert np.allclose(partial_trace(rho000, keep=(1, 2)), projector(np.eye(4)[0]))
    ghz = st.density(st.ghz())
    assert np.allclose(partial_trace(ghz, keep=(1, 2)), 0.5 * (projector(np.eye(4)[0]) + projector(np.eye(4)[3])))
    assert np.allclose(partial_trace(ghz, keep=(0, 1, 2)), ghz)


def test_partial_trace_single_qubits_of_product():
    a, b, c = np.diag([0.2, 0.8]), np.diag([0.6, 0.4]), np.array([[0.5, 0.5j], [-0.5j, 0.5]])
    m = kron(a, b, c)
    assert np.allclose(partial_trace(m, keep=(0,)), a)
    assert np.allclose(partial_trace(m, keep=(1,)), b)
    assert np.allclose(partial_trace(m, keep=(2,)), c)
    assert np.allclose(partial_trace(m, keep=(0, 2)), kron(a, c))


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(StructuralError):
        partial_trace(np.eye(3), keep=(0,))
    with pytest.raises(StructuralError):
        partial_trace(np.eye(4), keep=())


@given(herm(8), hst.sets(hst.integers(0, 2), min_size=1))
def test_partial_trace_preserves_trace(m, keep):
    assert abs(np.trace(partial_trace(m, keep)) - np.trace(m)) <= 1e-12 * max(1.0, np.abs(m).max())


def test_hermitian_eig_examples():
    vals, _ = hermitian_eig(np.diag([2.0, 1.0]))
    assert np.allclose(vals, [1, 2])
    vals, vecs = hermitian_eig(X)
    assert np.allclose(vals, [-1, 1])
    minus = np.array([1, -1]) / math.sqrt(2)
    assert abs(abs(np.vdot(minus, vecs[:, 0])) - 1) < 1e-12
    vals, _ = hermitian_eig(0.5 * (projector(np.eye(4)[0]) + projector(np.eye(4)[3])))
    assert np.allclose(vals, [0, 0, 0.5, 0.5])


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@given(herm(4))
def test_hermitian_eig_reconstructs(m):
    vals, vecs = hermitian_eig(m)
    assert np.all(np.diff(vals) >= 0)
    assert np.max(np.abs(vecs @ np.diag(vals) @ vecs.conj().T - m)) <= 1e-9


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    psi = np.array([0.6, 0.8j])
    assert np.allclose(psd_sqrt(projector(psi, 0.36)), projector(psi, 0.6))


def test_psd_sqrt_clips_noise_and_rejects_negative():
    assert np.allclose(psd_sqrt(np.diag([1.0, -5e-11])), np.diag([1.0, 0.0]))
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -1e-6]))


@given(psd(4))
def test_psd_sqrt_squares_back(m):
    s = psd_sqrt(m)
    assert np.max(np.abs(s @ s - m)) <= 1e-9 * max(1.0, np.abs(m).max())
    assert np.linalg.eigvalsh(s)[0] >= -1e-10


def test_fidelity_examples():
    rho = st.density(st.gghz(0.3))
    assert abs(uhlmann_fidelity(rho, rho) - 1) < 1e-12
    e = np.eye(4)
    assert uhlmann_fidelity(projector(e[0], 0.5), projector(e[3], 0.5)) == 0.0
    phi = (e[0] + e[3]) / math.sqrt(2)
    sigma = build_1sdi(st.gghz(0.3)).elements[(0, 0)]
    expected = 0.5 * (math.cos(0.3) + math.sin(0.3)) / math.sqrt(2)
    assert abs(uhlmann_fidelity(projector(phi, 0.5), sigma) - expected) < 1e-12


def test_fidelity_dim_mismatch():
    with pytest.raises(StructuralError):
        uhlmann_fidelity(np.eye(2), np.eye(4))


@given(psd(4), psd(4))
def test_fidelity_symmetric(a, b):
    assert abs(uhlmann_fidelity(a, b) - uhlmann_fidelity(b, a)) <= 1e-9 * max(1.0, np.trace(a).real, np.trace(b).real)


@given(psd(4, rank=2))
def test_fidelity_self_is_trace(a):
    assert abs(uhlmann_fidelity(a, a) - np.trace(a).real) <= 1e-9 * max(1.0, np.trace(a).real)


@given(psd(4, rank=1), psd(4))
def test_rank_one_fast_path_matches_general(a, b):
    s = lambda m: psd_sqrt(m)
    general = float(np.linalg.svd(s(a) @ s(b), compute_uv=False).sum())
    assert abs(uhlmann_fidelity(a, b) - general) <= 1e-10 * max(1.0, np.abs(a).max() * np.abs(b).max())


def test_fidelity_rank_one_formula():
    v = np.array([1.0, 1j]) / math.sqrt(2)
    b = np.diag([0.3, 0.7])
    assert abs(fidelity_rank_one(math.sqrt(0.5) * v, b) - math.sqrt(0.5 * 0.5)) < 1e-12
