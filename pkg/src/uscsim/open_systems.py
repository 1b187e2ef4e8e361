"""Zero-temperature master equations for a qubit coupled to a mode.

Two Lindbladians are provided.  The standard one applies photon loss,
qubit decay and dephasing to the bare operators ``a``, ``s-`` and ``sz``.
With strong coupling that form lets relaxation pump energy into the system.
The dressed one instead lets the baths cause jumps ``|j><k|`` between
eigenstates of the full Hamiltonian, always downward in energy, with rates
set by the bath noise spectrum at the transition frequency.  The dressed
ground state is then exactly stationary.

Density matrices handed to the dressed machinery live in the eigenbasis of
the supplied :class:`~uscsim.spectra.EigenSystem`; :func:`to_eigenbasis` and
:func:`from_eigenbasis` convert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import InvalidState, LayoutMismatch, NonUniqueSteadyState, StepTooCoarse
from .hilbert import COperator, make_destroy, make_pauli
from .models import RabiModel
from .spectra import EigenSystem, eigensystem

ShapeKind = Literal["flat", "ohmic"]
SHAPES = ("flat", "ohmic")
DEGENERATE_GAP = 1e-9


def spectral_shape(kind: ShapeKind, freq: float, ref_freq: float = 1.0) -> float:
    """Zero-temperature noise spectrum normalised to 1 at ``ref_freq``.

    ``flat`` is 1 for ``freq >= 0``; ``ohmic`` is ``freq / ref_freq`` for
    ``freq > 0``.  Negative frequencies (absorption) give 0.  The flat value at
    exactly zero frequency is kept so that pure dephasing survives.
    """
    if kind == "flat":
        return 1.0 if freq >= -DEGENERATE_GAP else 0.0
    if kind == "ohmic":
        return freq / ref_freq if freq > DEGENERATE_GAP else 0.0
    raise ValueError(f"unknown spectral shape {kind!r}; choose from {SHAPES}")


@dataclass(frozen=True)
class LindbladSpec:
    kappa: float
    gamma: float
    gamma_phi: float
    kappa_shape: ShapeKind = "ohmic"
    gamma_shape: ShapeKind = "flat"
    gamma_phi_shape: ShapeKind = "ohmic"
    ref_freq: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "gamma", "gamma_phi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite non-negative rate, got {v}")
        for s in (self.kappa_shape, self.gamma_shape, self.gamma_phi_shape):
            if s not in SHAPES:
                raise ValueError(f"unknown spectral shape {s!r}")
        if not self.ref_freq > 0:
            raise ValueError("ref_freq must be positive")

    def kappa_at(self, freq: float) -> float:
        return self.kappa * spectral_shape(self.kappa_shape, freq, self.ref_freq)

    def gamma_at(self, freq: float) -> float:
        return self.gamma * spectral_shape(self.gamma_shape, freq, self.ref_freq)

    def gamma_phi_at(self, freq: float) -> float:
        return self.gamma_phi * spectral_shape(self.gamma_phi_shape, freq, self.ref_freq)

    @property
    def max_rate(self) -> float:
        return max(self.kappa, self.gamma, self.gamma_phi)


# ------------------------------------------------------------------ standard form


def _dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    od = op.conj().T
    ood = od @ op
    return op @ rho @ od - 0.5 * (ood @ rho + rho @ ood)


def _check_rho(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise LayoutMismatch(f"density matrix shape {rho.shape} vs dimension {dim}")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise InvalidState("density matrix trace differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise InvalidState("density matrix is not Hermitian")
    return rho


@dataclass(frozen=True, eq=False)
class StandardOperators:
    hamiltonian: np.ndarray
    jumps: tuple[tuple[float, np.ndarray], ...]  # (rate, operator)


def standard_operators(hamiltonian: COperator, spec: LindbladSpec, qubit_index: int = 0,
                       mode_index: int | None = None) -> StandardOperators:
    layout = hamiltonian.layout
    if mode_index is None:
        mode_index = layout.mode_indices[0]
    jumps = []
    if spec.kappa:
        jumps.append((spec.kappa, make_destroy(layout, mode_index).matrix))
    if spec.gamma:
        jumps.append((spec.gamma, make_pauli(layout, qubit_index, "-").matrix))
    if spec.gamma_phi:
        jumps.append((0.5 * spec.gamma_phi, make_pauli(layout, qubit_index, "z").matrix))
    return StandardOperators(hamiltonian.matrix, tuple(jumps))


def standard_lindblad_rhs(rho: np.ndarray, hamiltonian: COperator, spec: LindbladSpec,
                          qubit_index: int = 0, mode_index: int | None = None,
                          operators: StandardOperators | None = None) -> np.ndarray:
    """``-i[H, rho] + kappa D[a] + gamma D[s-] + (gamma_phi/2) D[sz]`` with bare operators."""
    ops = operators or standard_operators(hamiltonian, spec, qubit_index, mode_index)
    h = ops.hamiltonian
    rho = _check_rho(rho, h.shape[0])
    out = -1j * (h @ rho - rho @ h)
    for rate, op in ops.jumps:
        out += rate * _dissipator(op, rho)
    return out


# ------------------------------------------------------------------ dressed form


@dataclass(frozen=True, eq=False)
class DressedRates:
    """Rates for jumps ``|j><k|`` between eigenstates, indexed ``[j, k]``.

    ``gaps[j, k] = E_k - E_j``; only entries with ``gaps > 0`` can be nonzero.
    """

    energies: np.ndarray
    gaps: np.ndarray
    dephasing_amplitudes: np.ndarray
    dephasing: np.ndarray
    photon: np.ndarray
    qubit: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.dephasing + self.photon + self.qubit

    @property
    def max_frequency(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def max_rate(self) -> float:
        return float(max(self.total.sum(axis=0).max(initial=0.0),
                         (self.dephasing_amplitudes**2).max(initial=0.0)))

    def table(self) -> list[tuple[int, int, float, float]]:
        """``(j, k, gap, total rate)`` for every nonzero jump."""
        tot = self.total
        j, k = np.nonzero(tot)
        return [(int(a), int(b), float(self.gaps[a, b]), float(tot[a, b])) for a, b in zip(j, k)]


def _bath_operators(es: EigenSystem, qubit_index: int, mode_index: int | None):
    layout = es.layout
    if mode_index is None:
        mode_index = layout.mode_indices[0]
    a = make_destroy(layout, mode_index)
    return {
        "x": es.in_eigenbasis(a + a.dag()),
        "sx": es.in_eigenbasis(make_pauli(layout, qubit_index, "x")),
        "sz": es.in_eigenbasis(make_pauli(layout, qubit_index, "z")),
    }


def dressed_rates(es: EigenSystem, spec: LindbladSpec, qubit_index: int = 0,
                  mode_index: int | None = None) -> DressedRates:
    """Zero-temperature jump rates between eigenstates.

    ``Phi_j = sqrt(gamma_phi(0)/2) sz_jj``; for ``E_k > E_j``:
    ``dephasing = gamma_phi(gap)/2 |sz_jk|^2``, ``photon = kappa(gap) |X_jk|^2``
    and ``qubit = gamma(gap) |sx_jk|^2`` with ``X = a + a^dag``.
    """
    ops = _bath_operators(es, qubit_index, mode_index)
    e = es.energies
    gaps = e[np.newaxis, :] - e[:, np.newaxis]
    down = gaps > DEGENERATE_GAP
    vec = np.vectorize
    k_gap = np.where(down, vec(spec.kappa_at)(gaps), 0.0)
    g_gap = np.where(down, vec(spec.gamma_at)(gaps), 0.0)
    p_gap = np.where(down, vec(spec.gamma_phi_at)(gaps), 0.0)
    phi = math.sqrt(0.5 * spec.gamma_phi_at(0.0)) * np.real(np.diag(ops["sz"]))
    return DressedRates(
        energies=e.copy(),
        gaps=gaps,
        dephasing_amplitudes=phi,
        dephasing=0.5 * p_gap * np.abs(ops["sz"]) ** 2,
        photon=k_gap * np.abs(ops["x"]) ** 2,
        qubit=g_gap * np.abs(ops["sx"]) ** 2,
    )


@dataclass(frozen=True, eq=False)
class GroupedJumps:
    """Collective jump operators, one per bath and distinct transition frequency."""

    operators: tuple[np.ndarray, ...]


def grouped_jumps(es: EigenSystem, spec: LindbladSpec, qubit_index: int = 0,
                  mode_index: int | None = None, freq_tol: float = 1e-8) -> GroupedJumps:
    """Secular variant: transitions sharing a frequency act through one operator.

    For each bath with coupling operator ``O`` and each distinct downward gap
    ``w`` the jump is ``sqrt(rate(w)) sum_{gap_jk = w} O_jk |j><k|``.  It
    keeps coherences between equally spaced ladders, so at zero coupling it
    reproduces the standard Lindbladian for any state.
    """
    ops = _bath_operators(es, qubit_index, mode_index)
    e = es.energies
    gaps = e[np.newaxis, :] - e[:, np.newaxis]
    down = gaps > DEGENERATE_GAP
    values = np.sort(gaps[down])
    distinct = []
    for w in values:
        if not distinct or w - distinct[-1] > freq_tol * max(1.0, abs(w)):
            distinct.append(w)
    baths = ((spec.kappa_at, ops["x"], 1.0), (spec.gamma_at, ops["sx"], 1.0),
             (spec.gamma_phi_at, ops["sz"], 0.5))
    out = []
    for w in distinct:
        mask = down & (np.abs(gaps - w) <= freq_tol * max(1.0, abs(w)))
        for rate_at, op, factor in baths:
            rate = factor * rate_at(w)
            if rate > 0:
                jump = np.where(mask, op, 0.0)
                if np.any(jump):
                    out.append(math.sqrt(rate) * jump)
    return GroupedJumps(tuple(out))


def dressed_lindblad_rhs(rho: np.ndarray, es: EigenSystem, rates: DressedRates,
                         grouped: GroupedJumps | None = None) -> np.ndarray:
    """Dressed Lindbladian in the eigenbasis of ``es``.

    By default each transition is an independent jump, evaluated in
    ``O(d^2)``.  Passing ``grouped`` switches the photon, qubit and
    off-diagonal dephasing jumps to the collective operators instead.
    """
    rho = _check_rho(rho, len(rates.energies))
    return _dressed_unchecked(rho, rates, grouped)


def to_eigenbasis(es: EigenSystem, rho: np.ndarray) -> np.ndarray:
    v = es.vectors
    rho = np.asarray(rho)
    if rho.ndim == 1:
        c = v.conj().T @ rho
        return np.outer(c, c.conj())
    return v.conj().T @ rho @ v


def from_eigenbasis(es: EigenSystem, rho: np.ndarray) -> np.ndarray:
    v = es.vectors
    return v @ rho @ v.conj().T


# ------------------------------------------------------------------ generators and steady states


def liouvillian(rhs: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Matrix of a linear map on ``dim x dim`` matrices, acting on row-major ``rho.ravel()``.

    Built column by column by applying ``rhs`` to matrix units, so it works
    for any of the right-hand sides above.  The trace and Hermiticity checks
    on the input are bypassed because matrix units are not states.
    """
    cols = np.empty((dim * dim, dim * dim), dtype=complex)
    unit = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim * dim):
        unit.flat[idx] = 1.0
        cols[:, idx] = rhs(unit).ravel()
        unit.flat[idx] = 0.0
    return cols


def standard_liouvillian(hamiltonian: COperator, spec: LindbladSpec, qubit_index: int = 0,
                         mode_index: int | None = None) -> np.ndarray:
    """Closed-form superoperator of :func:`standard_lindblad_rhs` (row-major vectorisation)."""
    ops = standard_operators(hamiltonian, spec, qubit_index, mode_index)
    h = ops.hamiltonian
    ident = np.eye(h.shape[0])
    gen = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    for rate, op in ops.jumps:
        ood = op.conj().T @ op
        gen += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ood, ident) - 0.5 * np.kron(ident, ood.T))
    return gen


def dressed_liouvillian(es: EigenSystem, rates: DressedRates, grouped: GroupedJumps | None = None) -> np.ndarray:
    dim = len(rates.energies)
    return liouvillian(lambda r: _dressed_unchecked(r, rates, grouped), dim)


def _dressed_unchecked(rho, rates: DressedRates, grouped: GroupedJumps | None):
    e = rates.energies
    phi = rates.dephasing_amplitudes
    out = -1j * (e[:, None] - e[None, :]) * rho
    out -= 0.5 * (phi[:, None] - phi[None, :]) ** 2 * rho
    if grouped is None:
        gamma = rates.total
        outflow = gamma.sum(axis=0)
        out += np.diag(gamma @ np.diag(rho))
        out -= 0.5 * (outflow[:, None] + outflow[None, :]) * rho
    else:
        for op in grouped.operators:
            out += _dissipator(op, rho)
    return out


def dressed_rhs_function(rates: DressedRates, grouped: GroupedJumps | None = None
                         ) -> Callable[[float, np.ndarray], np.ndarray]:
    """``(t, rho) -> d rho/dt`` for :func:`evolve_density`, skipping the per-call state checks."""
    return lambda t, rho: _dressed_unchecked(rho, rates, grouped)


def steady_state(generator: np.ndarray, gap_tol: float = 1e-10, residual_tol: float = 1e-9) -> np.ndarray:
    """Unique null vector of a Liouvillian, returned as a density matrix."""
    n = generator.shape[0]
    dim = int(round(math.sqrt(n)))
    if dim * dim != n:
        raise ValueError("generator is not a superoperator on square matrices")
    _, s, vh = np.linalg.svd(generator)
    if len(s) > 1 and s[-2] <= gap_tol:
        raise NonUniqueSteadyState(f"second-smallest singular value {s[-2]:.3g} <= {gap_tol:g}")
    rho = vh[-1].conj().reshape(dim, dim)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.max(np.abs(generator @ rho.ravel()))
    if residual > residual_tol:
        raise NonUniqueSteadyState(f"steady-state residual {residual:.3g} above {residual_tol:g}")
    return rho


# ------------------------------------------------------------------ time stepping


@dataclass
class DensityEvolution:
    times: np.ndarray
    states: list[np.ndarray]


def rk4_step_limit(max_frequency: float, max_rate: float) -> float:
    scale = max(abs(max_frequency), abs(max_rate))
    return math.inf if scale == 0 else 1.0 / (20.0 * scale)


def evolve_density(rhs: Callable[[float, np.ndarray], np.ndarray], rho0: np.ndarray,
                   times: np.ndarray, max_step: float, substeps: int | None = None) -> DensityEvolution:
    """Fourth-order Runge-Kutta from ``times[0]``, recording at every entry of ``times``.

    Each interval is split into enough equal substeps to stay below
    ``max_step``.  Passing ``substeps`` fixes the count instead and raises
    :class:`StepTooCoarse` if that violates the limit.
    """
    times = np.asarray(times, dtype=float)
    rho = np.array(rho0, dtype=complex)
    out = [rho.copy()]
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        if substeps is None:
            n = max(1, math.ceil(span / max_step - 1e-12))
        else:
            n = substeps
            if span / n > max_step * (1 + 1e-12):
                raise StepTooCoarse(f"step {span / n:.3g} exceeds limit {max_step:.3g}")
        h = span / n
        t = t0
        for _ in range(n):
            k1 = rhs(t, rho)
            k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
            k4 = rhs(t + h, rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out.append(rho.copy())
    return DensityEvolution(times, out)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


# ------------------------------------------------------------------ output field


@dataclass(frozen=True)
class OutputChannelParams:
    """Line coupling, line permittivity and phase velocity; they only set the flux prefactor."""

    coupling: float = 1.0
    permittivity: float = 1.0
    velocity: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("coupling", "permittivity", "velocity", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def prefactor(self) -> float:
        return self.coupling**2 / (8.0 * math.pi**2 * self.hbar * self.permittivity * self.velocity)


@dataclass(frozen=True, eq=False)
class EmissionOperator:
    """Positive-frequency part of the field derivative, in the eigenbasis."""

    eigenbasis: np.ndarray
    es: EigenSystem
    prefactor: float

    @property
    def lab(self) -> COperator:
        v = self.es.vectors
        return COperator(self.es.layout, v @ self.eigenbasis @ v.conj().T)

    def flux(self, rho_eigen: np.ndarray) -> float:
        """``prefactor * Tr(P-dot^+ rho P-dot^-)`` for a density matrix in the eigenbasis."""
        m = self.eigenbasis
        val = np.trace(m.conj().T @ m @ rho_eigen)
        return float(self.prefactor * max(val.real, 0.0))


def output_emission_operator(es: EigenSystem, params: OutputChannelParams | None = None,
                             momentum_scale: float = 1.0, mode_index: int | None = None) -> EmissionOperator:
    """``-i sum_{j<k} (E_k - E_j) P_jk |j><k|`` with ``P = -i P0 (a - a^dag)``.

    Only downward matrix elements are kept, so it annihilates the ground
    state and the emitted flux vanishes there however many virtual photons
    the ground state holds.
    """
    params = params or OutputChannelParams()
    layout = es.layout
    if mode_index is None:
        mode_index = layout.mode_indices[0]
    a = make_destroy(layout, mode_index)
    p = es.in_eigenbasis((a - a.dag()) * (-1j * momentum_scale))
    e = es.energies
    gaps = e[np.newaxis, :] - e[:, np.newaxis]
    m = np.where(gaps > DEGENERATE_GAP, -1j * gaps * p, 0.0)
    return EmissionOperator(m, es, params.prefactor)


# ------------------------------------------------------------------ modulated coupling


@dataclass
class ModulationResult:
    times: np.ndarray
    flux: np.ndarray
    photons: np.ndarray

    @property
    def mean_flux(self) -> float:
        half = len(self.times) // 2
        return float(np.mean(self.flux[half:]))


def modulated_coupling_evolution(base: RabiModel, delta_g: float, mod_freq: float, times: np.ndarray,
                                 lindblad: LindbladSpec, nmax: int = 30, n_levels: int = 12,
                                 params: OutputChannelParams | None = None) -> ModulationResult:
    """Drive ``g(t) = g0 + delta_g sin(mod_freq t)`` from the dressed ground state.

    Rates and the emission operator are frozen at ``g0``; only the
    Hamiltonian follows ``g(t)``.  Work is done in the lowest ``n_levels``
    eigenstates of the ``g0`` Hamiltonian.  The mean flux of the second half
    of the run is the emitted-photon signal.
    """
    layout = base.default_layout(nmax)
    es = eigensystem(base.hamiltonian(layout)).truncated(n_levels)
    rates = dressed_rates(es, lindblad)
    emission = output_emission_operator(es, params)
    coupling_op = base.sign * es.in_eigenbasis(
        make_pauli(layout, 0, "x") @ (make_destroy(layout, 1) + make_destroy(layout, 1).dag())
    )
    number = es.in_eigenbasis(make_destroy(layout, 1).dag() @ make_destroy(layout, 1))

    dissipative = dressed_rhs_function(rates)

    def rhs(t, rho):
        out = dissipative(t, rho)
        if delta_g:
            v = delta_g * math.sin(mod_freq * t) * coupling_op
            out += -1j * (v @ rho - rho @ v)
        return out

    rho0 = np.zeros((n_levels, n_levels), dtype=complex)
    rho0[0, 0] = 1.0
    limit = rk4_step_limit(max(rates.max_frequency, abs(mod_freq)), rates.max_rate)
    evo = evolve_density(rhs, rho0, np.asarray(times, float), limit)
    flux = np.array([emission.flux(r) for r in evo.states])
    photons = np.array([np.real(np.trace(number @ r)) for r in evo.states])
    return ModulationResult(evo.times, flux, photons)
