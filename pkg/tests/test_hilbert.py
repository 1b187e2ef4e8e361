import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uscsim.errors import InvalidState, InvalidSubsystem, InvalidTruncation, LayoutMismatch
from uscsim.hilbert import (
    BosonMode,
    Qubit,
    SystemLayout,
    basis_state,
    converge_nmax,
    displaced_vacuum,
    embed,
    expectation,
    fidelity,
    fock_populations,
    local_destroy,
    make_destroy,
    make_identity,
    make_number,
    make_pauli,
    make_quadratures,
    parity_operator,
    purity,
    qubit_ket,
    qubit_mode_layout,
    reduced_density,
    tensor,
    to_density,
    validate_state,
    von_neumann_entropy,
)


def test_ladder_matrix_elements():
    layout = SystemLayout((BosonMode(3),))
    a = make_destroy(layout, 0).matrix
    assert a[1, 2] == pytest.approx(math.sqrt(2))
    vac = basis_state(layout, [0])
    assert np.allclose(a @ vac, 0)
    n = make_number(layout, 0)
    for k in range(4):
        ket = basis_state(layout, [k])
        assert np.allclose(n @ ket, k * ket)


def test_pauli_conventions():
    layout = SystemLayout((Qubit(),))
    sz = make_pauli(layout, 0, "z")
    g, e = basis_state(layout, ["g"]), basis_state(layout, ["e"])
    assert np.allclose(sz @ g, -g)
    assert expectation(e, sz) == pytest.approx(1.0)
    sp, sm = make_pauli(layout, 0, "+"), make_pauli(layout, 0, "-")
    assert np.allclose(sp @ g, e)
    assert np.allclose((sp @ sm + sm @ sp).matrix, np.eye(2))
    for axis in "xyz":
        s = make_pauli(layout, 0, axis)
        assert np.allclose((s @ s).matrix, np.eye(2))
    with pytest.raises(ValueError):
        make_pauli(layout, 0, "w")


def test_parity_on_chains():
    layout = qubit_mode_layout(4)
    p = parity_operator(layout)
    g0, e0 = basis_state(layout, ["g", 0]), basis_state(layout, ["e", 0])
    assert np.allclose(p @ g0, -g0)
    assert np.allclose(p @ e0, e0)
    assert np.allclose((p @ p).matrix, np.eye(layout.total_dim))
    # |g0> <-> |e1> <-> |g2> share parity
    for labels in (["e", 1], ["g", 2]):
        ket = basis_state(layout, labels)
        assert np.allclose(p @ ket, -ket)


def test_displaced_vacuum_photon_number():
    beta = 1.3 - 0.4j
    nmax = 40
    psi = displaced_vacuum(nmax, beta)
    layout = SystemLayout((BosonMode(nmax),))
    assert expectation(psi, make_number(layout, 0)).real == pytest.approx(abs(beta) ** 2, abs=1e-10)
    # Poisson statistics as an independent oracle
    n = np.arange(nmax + 1)
    poisson = np.exp(-abs(beta) ** 2) * np.array([abs(beta) ** (2 * k) / math.factorial(k) for k in n])
    assert np.allclose(fock_populations(layout, psi, 0), poisson, atol=1e-12)


def test_quadratures_commutator():
    layout = SystemLayout((BosonMode(30),))
    x, p = make_quadratures(layout, 0)
    comm = x.commutator(p).matrix
    # [x, p] = i except at the truncation edge
    assert np.allclose(np.diag(comm)[:-1], 1j)


def test_reduced_density_of_product_and_bell():
    layout = SystemLayout((Qubit("a"), Qubit("b")))
    plus = qubit_ket(math.pi / 2)
    prod = tensor(plus, np.array([1, 0], complex))
    rho_a = reduced_density(layout, prod, [0])
    assert np.allclose(rho_a, np.outer(plus, plus.conj()))
    bell = (basis_state(layout, ["g", "g"]) + basis_state(layout, ["e", "e"])) / math.sqrt(2)
    rho = reduced_density(layout, bell, [1])
    assert np.allclose(rho, np.eye(2) / 2)
    assert von_neumann_entropy(rho) == pytest.approx(math.log(2))
    assert purity(rho) == pytest.approx(0.5)
    # density-matrix input agrees with ket input
    assert np.allclose(reduced_density(layout, to_density(bell), [1]), rho)
    with pytest.raises(InvalidSubsystem):
        reduced_density(layout, bell, [5])


def test_fidelity_forms():
    a = np.array([1, 0], complex)
    b = np.array([1, 1], complex) / math.sqrt(2)
    assert fidelity(a, b) == pytest.approx(0.5)
    assert fidelity(a, to_density(b)) == pytest.approx(0.5)
    assert fidelity(to_density(b), a) == pytest.approx(0.5)


def test_validation_errors():
    layout = qubit_mode_layout(2)
    with pytest.raises(InvalidTruncation):
        BosonMode(0)
    with pytest.raises(InvalidTruncation):
        basis_state(layout, ["g", 3])
    with pytest.raises(InvalidState):
        basis_state(layout, ["x", 0])
    with pytest.raises(LayoutMismatch):
        basis_state(layout, ["g"])
    with pytest.raises(InvalidState):
        validate_state(np.array([1.0, 1.0]))
    with pytest.raises(LayoutMismatch):
        make_identity(layout) + make_identity(qubit_mode_layout(3))
    with pytest.raises(InvalidTruncation):
        qubit_mode_layout(9000)
    with pytest.raises(InvalidSubsystem):
        make_destroy(layout, 0)


def test_converge_nmax_on_displaced_vacuum():
    def mean_n(nmax):
        psi = displaced_vacuum(nmax, 2.0)
        return float(np.sum(np.arange(nmax + 1) * np.abs(psi) ** 2))

    nmax, value, change = converge_nmax(mean_n, 20, rtol=1e-10)
    assert value == pytest.approx(4.0, abs=1e-9)
    assert change <= 1e-10


@given(st.integers(1, 5), st.integers(1, 5))
def test_disjoint_embeddings_commute(nmax_a, nmax_b):
    layout = SystemLayout((Qubit(), BosonMode(nmax_a), BosonMode(nmax_b)))
    a1 = make_destroy(layout, 1)
    a2 = make_destroy(layout, 2)
    sx = make_pauli(layout, 0, "x")
    for x, y in ((a1, a2), (a1, sx), (a2.dag(), sx)):
        assert np.max(np.abs(x.commutator(y).matrix)) <= 1e-12


@given(st.integers(1, 6))
def test_embed_matches_kron(nmax):
    layout = qubit_mode_layout(nmax)
    a = local_destroy(nmax)
    assert np.allclose(embed(layout, 1, a).matrix, np.kron(np.eye(2), a))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_number_expectation_of_displaced_vacuum(re, im):
    beta = complex(re, im)
    nmax = 80
    psi = displaced_vacuum(nmax, beta)
    n = np.sum(np.arange(nmax + 1) * np.abs(psi) ** 2)
    assert n == pytest.approx(abs(beta) ** 2, abs=1e-8)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)
