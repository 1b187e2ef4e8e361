import math

import numpy as np
import pytest

from uscsim.dynamics import TimeGrid
from uscsim.errors import CommensurabilityError, LoopNotClosed
from uscsim.models import DiracEffective, LongitudinalPair, OptomechanicalPair
from uscsim.protocols import (
    cphase_sequence,
    dirac_observables,
    ghz_minimum_time,
    ghz_protocol,
    ghz_target,
    loop_schedule,
    noon_protocol,
    predicted_phase,
    sign_flip_schedule,
)

GATE_COUPLING = math.sqrt(math.pi / 16)


def test_ghz_target_shape():
    t = ghz_target(2)
    assert np.linalg.norm(t) == pytest.approx(1.0)
    assert abs(t[0]) == pytest.approx(1 / math.sqrt(2))
    assert abs(t[-1]) == pytest.approx(1 / math.sqrt(2))
    assert ghz_minimum_time(1 / 8, 1.0) == pytest.approx(8 * math.pi)


def test_ghz_two_qubits_reaches_conjugate_phase_target():
    res = ghz_protocol(2, 1 / 8, 1.0)
    assert res.commensurate
    assert res.loops == 4
    assert res.qubit_purity == pytest.approx(1.0, abs=1e-8)
    assert res.conjugate_phase_fidelity >= 0.999
    # the evolution produces the complex conjugate of the nominal relative phase
    assert res.fidelity < 1e-6


def test_ghz_not_formed_at_half_time():
    half = ghz_protocol(2, 1 / 8, 1.0, time=ghz_minimum_time(1 / 8, 1.0) / 2)
    assert max(half.fidelity, half.conjugate_phase_fidelity) < 0.9


def test_ghz_step_convergence():
    a = ghz_protocol(2, 1 / 8, 1.0, steps_per_period=400)
    b = ghz_protocol(2, 1 / 8, 1.0, steps_per_period=800)
    assert abs(a.conjugate_phase_fidelity - b.conjugate_phase_fidelity) <= 1e-6


def test_ghz_single_qubit_is_an_equal_superposition():
    res = ghz_protocol(1, 1 / 8, 1.0)
    populations = np.abs(res.state) ** 2
    assert populations.sum() == pytest.approx(1.0)
    assert res.qubit_purity == pytest.approx(1.0, abs=1e-8)


def test_ghz_commensurability():
    with pytest.raises(CommensurabilityError):
        ghz_protocol(2, 0.13, 1.0, strict=True)
    assert not ghz_protocol(2, 0.13, 1.0, nmax=8, steps_per_period=100).commensurate


def test_loop_schedules():
    sched = loop_schedule(1.0, math.pi / 2)
    assert [s[:2] for s in sched] == [(1, 0), (0, 1), (1, 0), (0, 1)]
    assert sum(s[2] for s in sched) == pytest.approx(2 * math.pi)
    assert len(sign_flip_schedule(1.0)) == 4


def test_cphase_reaches_quarter_phase():
    spec = LongitudinalPair((1.0, 1.3), 1.0, (GATE_COUPLING, GATE_COUPLING))
    assert predicted_phase(spec, math.pi / 2) == pytest.approx(math.pi / 4)
    res = cphase_sequence(spec, math.pi / 2, nmax=30)
    assert res.entangling_phase == pytest.approx(math.pi / 4, abs=1e-6)
    assert res.process_fidelity >= 0.99
    assert res.qubit_purity >= 1 - 1e-6


def test_cphase_phase_tracks_prediction():
    spec = LongitudinalPair((1.0, 1.3), 1.0, (0.3, 0.2))
    for t1 in (0.3, 1.0, 2.5):
        res = cphase_sequence(spec, t1, nmax=30)
        assert res.entangling_phase == pytest.approx(res.predicted_phase, abs=1e-6)


def test_cphase_phase_is_odd_under_time_reflection():
    spec = LongitudinalPair((1.0, 1.3), 1.0, (GATE_COUPLING, GATE_COUPLING))
    a = cphase_sequence(spec, 0.3, nmax=30)
    b = cphase_sequence(spec, 2 * math.pi - 0.3, nmax=30)
    assert a.entangling_phase == pytest.approx(-b.entangling_phase, abs=1e-6)


def test_cphase_without_second_coupling_is_local():
    res = cphase_sequence(LongitudinalPair((1.0, 1.0), 1.0, (0.3, 0.0)), 0.7, nmax=30)
    assert res.entangling_phase == pytest.approx(0.0, abs=1e-9)


def test_cphase_flags_open_loops():
    spec = LongitudinalPair((1.0, 1.3), 1.0, (GATE_COUPLING, GATE_COUPLING))
    with pytest.raises(LoopNotClosed):
        cphase_sequence(spec, math.pi / 2, nmax=30, schedule=sign_flip_schedule(math.pi / 2))


@pytest.mark.parametrize("n_target", [1, 2])
@pytest.mark.parametrize("radiation_pressure", [0.0, 0.5, 1.0])
def test_noon_fidelity(n_target, radiation_pressure):
    res = noon_protocol(OptomechanicalPair(10.0, 1.0, radiation_pressure, 0.01), n_target)
    assert res.fidelity >= 0.99
    assert res.alpha == pytest.approx(res.beta, abs=1e-3)


def test_noon_full_transfer():
    res = noon_protocol(OptomechanicalPair(10.0, 1.0, 1.0, 0.01), 1, mixing_angle=math.pi / 2)
    assert res.alpha == pytest.approx(0.0, abs=1e-3)
    assert res.fidelity >= 0.99


def test_noon_hopping_is_reduced_by_radiation_pressure():
    free = noon_protocol(OptomechanicalPair(10.0, 1.0, 0.0, 0.01), 1).effective_hopping
    dressed = noon_protocol(OptomechanicalPair(10.0, 1.0, 1.0, 0.01), 1).effective_hopping
    assert free == pytest.approx(0.01)
    assert dressed < free


def test_dirac_massless_motion_is_linear():
    internal = np.array([1, -1j]) / math.sqrt(2)
    traj = dirac_observables(DiracEffective(0.0, 1.0, 0.0), 0.0, 0.0, internal, TimeGrid(0, 5, 50))
    slope = np.polyfit(traj.times, traj.position, 1)[0]
    assert np.allclose(traj.position, slope * traj.times, atol=1e-8)
    assert abs(slope) == pytest.approx(1 / math.sqrt(2), rel=1e-6)


def test_dirac_frozen_without_coupling():
    traj = dirac_observables(DiracEffective(1.0, 0.0, 0.0), 0.7, -0.3, np.array([1, 0]), TimeGrid(0, 5, 20), nmax=40)
    assert np.allclose(traj.position, 0.7, atol=1e-8)
    assert np.allclose(traj.momentum, -0.3, atol=1e-8)


def test_zitterbewegung_frequency():
    mass = 2.0
    internal = np.array([1, 1]) / math.sqrt(2)
    traj = dirac_observables(DiracEffective(mass, 1.0, 0.0), 0.0, 0.0, internal, TimeGrid(0, 60, 3000), nmax=60)
    freqs = np.fft.rfftfreq(len(traj.times), traj.times[1]) * 2 * math.pi
    spectrum = np.abs(np.fft.rfft(traj.position - traj.position.mean()))
    band = freqs > 0.5 * mass
    peak = freqs[band][np.argmax(spectrum[band])]
    # two-level dispersion: the trembling frequency sits near twice the rest energy scale
    assert peak == pytest.approx(mass, rel=0.25)
