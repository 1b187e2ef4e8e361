"""Closed-system time evolution.

Static Hamiltonians are propagated exactly through their spectral
decomposition.  Time-dependent ones use midpoint exponentials
``exp(-i H(t + dt/2) dt)``, each computed from a Hermitian eigendecomposition,
so every step is unitary to machine precision.  The step size is checked
against the fastest frequency in the problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import LayoutMismatch, NotHermitian, StepTooCoarse, TruncationLeak
from .hilbert import (
    HERMITIAN_TOL,
    COperator,
    SystemLayout,
    basis_state,
    fidelity,
    fock_populations,
    validate_state,
)
from .models import (
    DigitalSplit,
    DrivenJC,
    RabiModel,
    digital_split,
    driven_frame_transform,
    driven_matrix_function,
    effective_qrm_of_driven,
)

STEPS_PER_PERIOD = 50
NORM_DRIFT_TOL = 1e-8
LEAK_TOL = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_steps + 1)

    @classmethod
    def covering(cls, t1: float, max_frequency: float, t0: float = 0.0,
                 steps_per_period: int = STEPS_PER_PERIOD) -> "TimeGrid":
        """Smallest uniform grid on ``[t0, t1]`` that satisfies the step rule."""
        period = 2.0 * math.pi / max_frequency if max_frequency > 0 else (t1 - t0)
        n = max(1, math.ceil((t1 - t0) / period * steps_per_period - 1e-9))
        return cls(t0, t1, n)


@dataclass
class PropagationResult:
    times: np.ndarray
    states: np.ndarray | None
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    norm_drift: float = 0.0
    final_state: np.ndarray | None = None

    def series(self, name: str) -> np.ndarray:
        return self.observables[name]


def _matrix(op: COperator | np.ndarray) -> np.ndarray:
    return op.matrix if isinstance(op, COperator) else np.asarray(op)


def _check_hermitian(h: np.ndarray) -> None:
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(h))):
        raise NotHermitian("Hamiltonian is not Hermitian")


def _observable_traces(states: np.ndarray, observables: Mapping[str, COperator | np.ndarray]) -> dict:
    out = {}
    for name, op in observables.items():
        m = _matrix(op)
        out[name] = np.einsum("ti,ij,tj->t", states.conj(), m, states)
        if np.max(np.abs(out[name].imag), initial=0.0) < 1e-12 * max(1.0, np.max(np.abs(out[name]))):
            out[name] = out[name].real
    return out


def propagate_static(
    hamiltonian: COperator | np.ndarray,
    psi0: np.ndarray,
    grid: TimeGrid,
    observables: Mapping[str, COperator | np.ndarray] | None = None,
    store_states: bool = True,
) -> PropagationResult:
    """``psi(t) = exp(-i H (t - t0)) psi0`` on every grid point, exactly."""
    h = _matrix(hamiltonian)
    if isinstance(hamiltonian, COperator):
        psi0 = validate_state(psi0, hamiltonian.layout)
    else:
        psi0 = validate_state(psi0)
        if psi0.shape[0] != h.shape[0]:
            raise LayoutMismatch("state and Hamiltonian dimensions differ")
    _check_hermitian(h)
    energies, vectors = np.linalg.eigh(0.5 * (h + h.conj().T))
    coeffs = vectors.conj().T @ psi0
    times = grid.times
    phases = np.exp(-1j * np.outer(times - grid.t0, energies))
    states = (phases * coeffs) @ vectors.T
    norms = np.linalg.norm(states, axis=1)
    return PropagationResult(
        times=times,
        states=states if store_states else None,
        observables=_observable_traces(states, observables or {}),
        norm_drift=float(np.max(np.abs(norms - 1.0))),
        final_state=states[-1],
    )


def _unitary_step(h: np.ndarray, dt: float) -> np.ndarray:
    e, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(-1j * e * dt)) @ v.conj().T


def propagate_timedep(
    builder: Callable[[float], COperator | np.ndarray],
    psi0: np.ndarray,
    grid: TimeGrid,
    max_frequency: float,
    observables: Mapping[str, COperator | np.ndarray] | None = None,
    store_states: bool = True,
    sample_every: int = 1,
) -> PropagationResult:
    """Midpoint-exponential propagation of ``i d/dt psi = H(t) psi``.

    ``max_frequency`` is the fastest angular frequency in the problem; the
    grid must resolve it with at least 50 steps per period.  States and
    observables are recorded every ``sample_every`` steps (and at the end).
    """
    if max_frequency > 0 and grid.dt > 2.0 * math.pi / max_frequency / STEPS_PER_PERIOD * (1 + 1e-12):
        raise StepTooCoarse(
            f"dt = {grid.dt:.3g} exceeds 2pi/({STEPS_PER_PERIOD} * {max_frequency:.3g})"
        )
    psi = validate_state(psi0).astype(complex)
    dt = grid.dt
    times = grid.times
    keep = sorted(set(range(0, grid.n_steps + 1, sample_every)) | {grid.n_steps})
    kept_states = [psi.copy()]
    kept_times = [times[0]]
    drift = 0.0
    for k in range(grid.n_steps):
        h = _matrix(builder(times[k] + 0.5 * dt))
        if k == 0:
            _check_hermitian(h)
        psi = _unitary_step(h, dt) @ psi
        if k + 1 in keep:
            drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
            kept_states.append(psi.copy())
            kept_times.append(times[k + 1])
    states = np.array(kept_states)
    return PropagationResult(
        times=np.array(kept_times),
        states=states if store_states else None,
        observables=_observable_traces(states, observables or {}),
        norm_drift=float(drift),
        final_state=psi,
    )


def check_truncation(layout: SystemLayout, states: np.ndarray, levels: int = 2,
                     tol: float = LEAK_TOL) -> float:
    """Largest population found in the top ``levels`` Fock states of any mode.

    Raises :class:`TruncationLeak` above ``tol``.
    """
    worst = 0.0
    for psi in np.atleast_2d(states):
        for m in layout.mode_indices:
            worst = max(worst, float(fock_populations(layout, psi, m)[-levels:].sum()))
    if worst > tol:
        raise TruncationLeak(f"top-{levels} Fock population {worst:.3g} exceeds {tol:g}")
    return worst


# ------------------------------------------------------------------ collapse and revival


def revival_probability(spec: RabiModel, grid: TimeGrid, nmax: int = 80,
                        psi0: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(times, |<psi0|psi(t)>|)``; default ``psi0`` is ``|g, 0>``."""
    layout = spec.default_layout(nmax)
    if psi0 is None:
        psi0 = basis_state(layout, ["g", 0])
    res = propagate_static(spec.hamiltonian(layout), psi0, grid)
    return res.times, np.abs(res.states @ psi0.conj())


def revival_maxima(times: np.ndarray, values: np.ndarray, period: float) -> np.ndarray:
    """Largest value in each window ``[(k - 1/2) T, (k + 1/2) T)`` for ``k >= 1``.

    The last window is cut at the end of the series.
    """
    out = []
    k = 1
    while (k - 0.5) * period < times[-1]:
        window = (times >= (k - 0.5) * period) & (times < (k + 0.5) * period)
        out.append(values[window].max())
        k += 1
    return np.array(out)


def photon_statistics(layout: SystemLayout, state: np.ndarray, mode_index: int | None = None) -> np.ndarray:
    """Photon-number distribution of one mode (the first mode by default)."""
    if mode_index is None:
        mode_index = layout.mode_indices[0]
    return fock_populations(layout, validate_state(state, layout), mode_index)


# ------------------------------------------------------------------ digital simulation


@dataclass(frozen=True)
class TrotterPlan:
    split: DigitalSplit
    total_time: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps


@dataclass
class TrotterResult:
    state: np.ndarray
    exact_state: np.ndarray
    fidelity: float
    n_steps: int

    @property
    def infidelity(self) -> float:
        return max(0.0, 1.0 - self.fidelity)


def trotter_evolve(plan: TrotterPlan, target: RabiModel, psi0: np.ndarray | None = None,
                   nmax: int = 40) -> TrotterResult:
    """Apply ``n`` repetitions of [step one, pulse, JC step, pulse] and compare with exact evolution.

    The anti-JC step is realised as ``P exp(-i H_jc dt) P^dag`` with the
    ideal qubit pulse ``P = exp(-i pi sx / 2)``.
    """
    layout = target.default_layout(nmax)
    if psi0 is None:
        psi0 = basis_state(layout, ["g", 0])
    psi = validate_state(psi0, layout).astype(complex)
    dt = plan.dt
    u1 = _unitary_step(plan.split.step_one(layout).matrix, dt)
    u2 = _unitary_step(plan.split.step_two_jc(layout).matrix, dt)
    pulse = plan.split.pulse(layout).matrix
    step = pulse @ u2 @ pulse.conj().T @ u1
    for _ in range(plan.n_steps):
        psi = step @ psi
    exact = _unitary_step(target.hamiltonian(layout).matrix, plan.total_time) @ psi0
    return TrotterResult(psi, exact, fidelity(exact, psi), plan.n_steps)


def trotter_sweep(target: RabiModel, total_time: float, step_counts, nmax: int = 40,
                  psi0: np.ndarray | None = None, qubit_share: float = 0.5) -> list[TrotterResult]:
    split = digital_split(target, qubit_share=qubit_share)
    return [trotter_evolve(TrotterPlan(split, total_time, n), target, psi0, nmax) for n in step_counts]


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# ------------------------------------------------------------------ analog simulation


@dataclass
class AnalogComparison:
    times: np.ndarray
    fidelities: np.ndarray
    effective: RabiModel

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min())


def analog_compare(spec: DrivenJC, nmax: int = 30, duration: float | None = None,
                   n_samples: int = 100, psi0: np.ndarray | None = None,
                   steps_per_period: int = STEPS_PER_PERIOD) -> AnalogComparison:
    """Propagate the driven JC system in the lab frame and compare with the effective Rabi model.

    Lab-frame states are mapped into the effective frame with
    :func:`driven_frame_transform` before computing the fidelity.  The
    default duration is one period of the effective Rabi coupling,
    ``2 pi / (g/2)``.
    """
    effective = effective_qrm_of_driven(spec)
    layout = spec.default_layout(nmax)
    if psi0 is None:
        psi0 = basis_state(layout, ["g", 0])
    if duration is None:
        duration = 2.0 * math.pi / effective.coupling
    grid = TimeGrid.covering(duration, spec.max_frequency, steps_per_period=steps_per_period)
    sample_every = max(1, grid.n_steps // n_samples)
    lab = propagate_timedep(driven_matrix_function(spec, layout), psi0, grid,
                            spec.max_frequency, sample_every=sample_every)
    h_eff = effective.hamiltonian(layout).matrix
    e, v = np.linalg.eigh(h_eff)
    c0 = v.conj().T @ psi0
    fids = []
    for t, psi in zip(lab.times, lab.states):
        ref = v @ (np.exp(-1j * e * t) * c0)
        fids.append(fidelity(ref, driven_frame_transform(spec, layout, t) @ psi))
    return AnalogComparison(lab.times, np.array(fids), effective)
