import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uscsim.errors import NotHermitian, SingularDetuning
from uscsim.hilbert import COperator, make_destroy, qubit_mode_layout
from uscsim.models import (
    AncillaProbe,
    Dicke,
    Hopfield,
    JaynesCummings,
    ProtectedDicke,
    RabiModel,
    TavisCummings,
    build_static,
)
from uscsim.spectra import (
    REGIME_NAMES,
    bloch_siegert_level_errors,
    classify_regime,
    doublet_splitting,
    eigensystem,
    eigensystem_of,
    ground_state_props,
    lamb_shift_exact,
    lamb_shift_perturbative,
    locate_anticrossing,
    transition_table,
)


def test_resonant_decoupled_spectrum_and_parities():
    es = eigensystem_of(RabiModel(1.0, 1.0, 0.0), 5)
    assert np.allclose(es.energies[:5], [-0.5, 0.5, 0.5, 1.5, 1.5])
    # |e,0> and |g,1> share parity +1
    assert es.parity_labels[:3] == [-1, 1, 1]
    assert es.ground_state[0] == pytest.approx(1.0)


def test_vacuum_rabi_splitting():
    es = eigensystem_of(RabiModel(1.0, 1.0, 0.1), 20)
    assert es.energies[2] - es.energies[1] == pytest.approx(0.2, rel=0.05)


def test_displaced_oscillator_ladder():
    es = eigensystem_of(RabiModel(0.0, 1.0, 2.0), 80)
    expected = np.repeat(np.arange(5) - 4.0, 2)
    assert np.allclose(es.energies[:10], expected, atol=1e-6)


def test_non_hermitian_rejected():
    layout = qubit_mode_layout(2)
    with pytest.raises(NotHermitian):
        eigensystem(make_destroy(layout, 1))


@pytest.mark.parametrize("ratio,label", [(0.05, "SC/JC"), (0.12, "perturbative-USC"),
                                         (0.5, "nonperturbative-USC/DSC"), (1.34, "perturbative-DSC")])
def test_regime_labels(ratio, label):
    assert classify_regime(ratio, 1.0).label == label


def test_regime_rejects_bad_frequency():
    with pytest.raises(ValueError):
        classify_regime(0.1, 0.0)


def test_ground_state_props():
    free = ground_state_props(eigensystem_of(RabiModel(1.0, 1.0, 0.0), 10))
    assert free.photon_number == pytest.approx(0.0, abs=1e-14)
    assert free.qubit_entropy == pytest.approx(0.0, abs=1e-12)
    displaced = ground_state_props(eigensystem_of(RabiModel(0.0, 1.0, 2.0), 80))
    assert displaced.photon_number == pytest.approx(4.0, abs=1e-6)
    # the degenerate ground doublet is resolved into parity states: maximally entangled
    assert displaced.qubit_entropy == pytest.approx(math.log(2), abs=1e-6)
    strong = ground_state_props(eigensystem_of(RabiModel(1.0, 1.0, 1.0), 40))
    assert strong.photon_number > 0
    assert strong.qubit_entropy > 0.1
    assert 0 <= strong.qubit_entropy <= math.log(2) + 1e-12


def test_ground_state_has_enlarged_field_fluctuations():
    props = ground_state_props(eigensystem_of(RabiModel(1.0, 1.0, 0.5), 40))
    # <(a + a^dag)^2> = 1 + 2n + <a^2 + a^dag^2>
    assert props.quad_sq == pytest.approx(1 + 2 * props.photon_number + props.anomalous, abs=1e-10)
    # the dipole coupling stretches the field quadrature it couples to
    assert props.anomalous > 0
    assert props.quad_sq > 1.0


def test_transition_parity_selection():
    layout = qubit_mode_layout(30)
    es = eigensystem(RabiModel(1.0, 1.0, 0.3).hamiltonian(layout))
    a = make_destroy(layout, 1)
    x = a + a.dag()
    table = transition_table(es, x, max_states=12)
    assert table
    for tr in table:
        assert es.parity[tr.lower] != es.parity[tr.upper]
        assert tr.frequency > 0


def test_free_transitions_are_single_photon():
    layout = qubit_mode_layout(6)
    es = eigensystem(JaynesCummings(1.3, 1.0, 0.0).hamiltonian(layout))
    a = make_destroy(layout, 1)
    number = np.diag((a.dag() @ a).matrix).real
    photons = [int(round(np.real(es.state(k).conj() @ (number * es.state(k))))) for k in range(len(es.energies))]
    for tr in transition_table(es, a + a.dag()):
        assert abs(photons[tr.upper] - photons[tr.lower]) == 1


def test_bloch_siegert_errors_grow_with_coupling():
    small = bloch_siegert_level_errors(RabiModel(1.0, 1.0, 0.02), 4, 20).max()
    large = bloch_siegert_level_errors(RabiModel(1.0, 1.0, 0.2), 4, 20).max()
    assert small < 1e-6 < large


def test_locate_anticrossing_on_two_level_model():
    def ham(x):
        layout = qubit_mode_layout(1)
        m = np.zeros((4, 4))
        m[0, 0], m[1, 1], m[0, 1], m[1, 0] = x, -x, 0.1, 0.1
        m[2, 2], m[3, 3] = 5.0, 6.0
        return COperator(layout, m)

    x, gap = locate_anticrossing(ham, (0, 1), (-1.0, 1.0))
    assert x == pytest.approx(0.0, abs=1e-6)
    assert gap == pytest.approx(0.2, abs=1e-9)


def test_probe_shift_at_zero_collective_coupling():
    w_an, w, g_an = 3.0, 1.0, 0.02
    probe = AncillaProbe(Dicke(2, 1.0, w, 0.0), w_an, g_an)
    expected = g_an**2 * 2 * w_an / (w_an**2 - w**2)
    assert lamb_shift_perturbative(probe, 10) == pytest.approx(expected, rel=1e-12)
    assert lamb_shift_exact(probe, 20).shift == pytest.approx(expected, rel=1e-3)


def test_probe_shift_changes_sign_across_the_mode():
    below = lamb_shift_perturbative(AncillaProbe(Dicke(2, 1.0, 1.0, 0.3), 0.8, 0.02), 15)
    above = lamb_shift_perturbative(AncillaProbe(Dicke(2, 1.0, 1.0, 0.3), 1.2, 0.02), 15)
    assert below < 0 < above
    with pytest.raises(SingularDetuning):
        lamb_shift_perturbative(AncillaProbe(Dicke(2, 1.0, 1.0, 0.3), 1.0, 0.02), 15)
    with pytest.raises(TypeError):
        lamb_shift_perturbative(AncillaProbe(RabiModel(1.0, 1.0, 0.3), 3.0, 0.02), 15)


@pytest.mark.parametrize("cls", [Dicke, TavisCummings, Hopfield])
def test_probe_shift_perturbative_vs_exact(cls):
    probe = AncillaProbe(cls(4, 1.0, 1.0, 0.5), 3.0, 0.02)
    exact = lamb_shift_exact(probe, 16)
    assert not exact.near_crossing
    assert lamb_shift_perturbative(probe, 16) == pytest.approx(exact.shift, rel=0.10)


def test_doublet_splitting_decays():
    free = doublet_splitting(ProtectedDicke(1, 1.0, 2.0, 0.0), 10)
    assert free.exact == pytest.approx(1.0)
    d1 = doublet_splitting(ProtectedDicke(1, 1.0, 1.0, 1.0), 60).exact
    d15 = doublet_splitting(ProtectedDicke(1, 1.0, 1.0, 1.5), 60).exact
    assert d15 < d1
    gs = np.linspace(1.0, 2.0, 6)
    logs = [math.log(doublet_splitting(ProtectedDicke(1, 1.0, 1.0, g), 80).exact) for g in gs]
    slope = np.polyfit(gs**2, logs, 1)[0]
    assert -4.0 <= slope <= -1.0


def test_regime_names_cover_thresholds():
    assert len(REGIME_NAMES) == 4


@given(st.floats(0.0, 1.5), st.floats(0.2, 2.0))
def test_parity_labels_are_clean_for_rabi(g, qubit):
    es = eigensystem_of(RabiModel(qubit, 1.0, g), 12)
    labels = es.parity[:6]
    assert set(np.unique(labels)) <= {-1, 1}


@given(st.floats(0.01, 5.0))
def test_regime_is_scale_invariant(scale):
    for ratio in (0.05, 0.2, 0.6, 1.5):
        assert classify_regime(ratio * scale, scale).label == classify_regime(ratio, 1.0).label


@given(st.floats(0.0, 1.0))
def test_truncation_convergence_of_low_levels(g):
    e30 = eigensystem_of(RabiModel(1.0, 1.0, g), 30).energies[:6]
    e60 = eigensystem_of(RabiModel(1.0, 1.0, g), 60).energies[:6]
    assert np.allclose(e30, e60, rtol=1e-8, atol=1e-10)


def test_build_static_requires_layout_or_nmax():
    with pytest.raises(ValueError):
        build_static(RabiModel(1, 1, 0.1))
