"""Eigendecomposition, regime labels and spectral observables.

Dense Hermitian diagonalization uses LAPACK through :func:`numpy.linalg.eigh`.
Degenerate clusters are rotated so each vector is a parity eigenstate where
parity is conserved, then ordered by parity (+1 first) and mean boson number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NotHermitian, SingularDetuning
from .hilbert import (
    COperator,
    HERMITIAN_TOL,
    SystemLayout,
    make_destroy,
    make_number,
    make_pauli,
    parity_operator,
    reduced_density,
    von_neumann_entropy,
)
from .models import (
    AncillaProbe,
    BlochSiegert,
    Dicke,
    Hopfield,
    ProtectedDicke,
    RabiModel,
    TavisCummings,
    TwoAtomRabi,
    build_static,
)

MIXED = 0
PARITY_CLEAN = 1.0 - 1e-6


@dataclass(frozen=True, eq=False)
class EigenSystem:
    energies: np.ndarray
    vectors: np.ndarray
    parity: np.ndarray  # +1, -1, or MIXED (0)
    layout: SystemLayout

    @property
    def parity_labels(self) -> list:
        return [int(p) if p else "mixed" for p in self.parity]

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.vectors[:, 0]

    def state(self, k: int) -> np.ndarray:
        return self.vectors[:, k]

    def in_eigenbasis(self, op: COperator | np.ndarray) -> np.ndarray:
        m = op.matrix if isinstance(op, COperator) else np.asarray(op)
        return self.vectors.conj().T @ m @ self.vectors

    def truncated(self, n_states: int) -> "EigenSystem":
        return EigenSystem(self.energies[:n_states], self.vectors[:, :n_states], self.parity[:n_states], self.layout)


def _total_number(layout: SystemLayout) -> np.ndarray:
    total = np.zeros(layout.total_dim)
    for m in layout.mode_indices:
        total = total + make_number(layout, m).matrix.diagonal().real
    return total


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9))
    return v * np.exp(-1j * np.angle(v[k]))


def eigensystem(
    H: COperator,
    parity: COperator | None = None,
    degeneracy_tol: float = 1e-9,
) -> EigenSystem:
    """Full decomposition of a Hermitian operator.

    ``parity`` defaults to the generalized parity over all qubits and modes;
    it is used only if it commutes with ``H``.
    """
    m = H.matrix
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
        raise NotHermitian("eigensystem requires a Hermitian operator")
    layout = H.layout
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    if parity is None:
        parity = parity_operator(layout, None, None)
    pmat = parity.matrix
    scale = max(1.0, float(np.max(np.abs(w))))
    commutes = np.max(np.abs(m @ pmat - pmat @ m)) <= 1e-10 * scale
    nvec = _total_number(layout)

    v = v.copy()
    tol = degeneracy_tol * scale
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            if commutes:
                pb = block.conj().T @ pmat @ block
                pw, pv = np.linalg.eigh(0.5 * (pb + pb.conj().T))
                block = block @ pv[:, ::-1]  # +1 first
                pw = pw[::-1]
                pieces = []
                for sign in (1, -1):
                    sel = np.abs(pw - sign) < 0.5
                    if np.any(sel):
                        sub = block[:, sel]
                        nb = sub.conj().T @ (nvec[:, None] * sub)
                        _, nv = np.linalg.eigh(0.5 * (nb + nb.conj().T))
                        pieces.append(sub @ nv)
                block = np.hstack(pieces)
            else:
                nb = block.conj().T @ (nvec[:, None] * block)
                _, nv = np.linalg.eigh(0.5 * (nb + nb.conj().T))
                block = block @ nv
            v[:, start:stop] = block
        start = stop
    v = np.column_stack([_fix_phase(v[:, k]) for k in range(v.shape[1])])
    pexp = np.real(np.einsum("ik,ij,jk->k", v.conj(), pmat, v))
    labels = np.where(np.abs(pexp) >= PARITY_CLEAN, np.sign(pexp), MIXED).astype(int)
    return EigenSystem(w, v, labels, layout)


def eigensystem_of(spec, nmax: int) -> EigenSystem:
    return eigensystem(build_static(spec, nmax=nmax))


# ------------------------------------------------------------------ regimes

REGIME_THRESHOLDS = (0.1, 0.3, 1.0)
REGIME_NAMES = ("SC/JC", "perturbative-USC", "nonperturbative-USC/DSC", "perturbative-DSC")


@dataclass(frozen=True)
class RegimeLabel:
    label: str
    ratio: float
    thresholds: tuple[float, float, float] = REGIME_THRESHOLDS


def classify_regime(coupling: float, mode_freq: float) -> RegimeLabel:
    """Coupling regime from ``|g|/w``; a value on a threshold belongs to the upper regime."""
    if not mode_freq > 0:
        raise ValueError("mode frequency must be positive")
    ratio = abs(coupling) / mode_freq
    idx = int(np.searchsorted(REGIME_THRESHOLDS, ratio, side="right"))
    return RegimeLabel(REGIME_NAMES[idx], ratio)


def bloch_siegert_level_errors(spec: RabiModel, n_levels: int, nmax: int) -> np.ndarray:
    """Per-level ``|E_BS - E_Rabi| / w``: how far the perturbative picture holds for each level."""
    e_full = eigensystem_of(spec, nmax).energies[:n_levels]
    bs = BlochSiegert(spec.qubit_freq, spec.mode_freq, spec.coupling)
    e_bs = np.linalg.eigvalsh(build_static(bs, nmax=nmax).matrix)[:n_levels]
    return np.abs(e_full - e_bs) / spec.mode_freq


# ------------------------------------------------------------------ ground state


@dataclass(frozen=True)
class GroundStateProps:
    photon_number: float
    quad_sq: float
    anomalous: float
    qubit_entropy: float


def ground_state_props(es: EigenSystem, qubit_index: int | None = None,
                       mode_index: int | None = None) -> GroundStateProps:
    layout = es.layout
    q = layout.qubit_indices[0] if qubit_index is None else qubit_index
    mi = layout.mode_indices[0] if mode_index is None else mode_index
    g = es.ground_state
    a = make_destroy(layout, mi).matrix
    ag = a @ g
    adg = a.conj().T @ g
    n = float(np.vdot(ag, ag).real)
    a2 = complex(np.vdot(g, a @ ag))
    anomalous = 2.0 * a2.real  # <a^2 + a^dag^2>
    quad = float(np.vdot(ag + adg, ag + adg).real)
    rho_q = reduced_density(layout, g, [q])
    return GroundStateProps(n, quad, anomalous, von_neumann_entropy(rho_q))


# ------------------------------------------------------------------ transitions


@dataclass(frozen=True)
class Transition:
    lower: int
    upper: int
    frequency: float
    strength: float


def transition_table(es: EigenSystem, op: COperator, floor: float = 1e-8,
                     max_states: int | None = None) -> list[Transition]:
    """All pairs ``i < j`` with ``|<i|op|j>|^2`` above ``floor``."""
    k = len(es.energies) if max_states is None else min(max_states, len(es.energies))
    sub = es.truncated(k)
    m = np.abs(sub.in_eigenbasis(op)) ** 2
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            if m[i, j] > floor:
                out.append(Transition(i, j, float(sub.energies[j] - sub.energies[i]), float(m[i, j])))
    return out


def locate_anticrossing(
    hamiltonian_of: Callable[[float], COperator],
    levels: tuple[int, int],
    bracket: tuple[float, float],
    n_scan: int = 41,
    xtol: float = 1e-10,
) -> tuple[float, float]:
    """Parameter value and minimum gap between two adjacent levels.

    Coarse scan over ``bracket`` then bounded Brent refinement around the
    best grid point.
    """
    i, j = levels

    def gap(x: float) -> float:
        e = np.linalg.eigvalsh(hamiltonian_of(x).matrix)
        return float(e[j] - e[i])

    grid = np.linspace(bracket[0], bracket[1], n_scan)
    gaps = [gap(x) for x in grid]
    k = int(np.argmin(gaps))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, n_scan - 1)]
    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    return float(res.x), float(res.fun)


@dataclass(frozen=True)
class AnticrossingResult:
    mode_freq: float
    half_splitting: float
    predicted: float


def two_atom_anticrossing(spec: TwoAtomRabi, nmax: int = 8,
                          bracket: tuple[float, float] | None = None) -> AnticrossingResult:
    """Locate the ``|gg,1> <-> |ee,0>`` anticrossing by scanning the mode frequency.

    These states become the fourth and fifth levels near ``w = 2W``.
    """
    W = spec.qubit_freq
    bracket = bracket or (1.5 * W, 2.5 * W)

    def ham(w: float) -> COperator:
        s = TwoAtomRabi(spec.qubit_freq, w, spec.coupling, spec.mixing_angle)
        return build_static(s, nmax=nmax)

    w, gap = locate_anticrossing(ham, (3, 4), bracket)
    return AnticrossingResult(w, gap / 2.0, spec.effective_coupling)


# ------------------------------------------------------------------ ancilla Lamb shift


def _ensemble_interaction_for_shift(system, layout: SystemLayout) -> COperator:
    """Interaction operator entering the second term of the perturbative probe shift."""
    m = system.n_qubits
    a = make_destroy(layout, m)
    x = a + a.dag()
    jx = make_pauli(layout, 0, "x")
    for i in range(1, m):
        jx = jx + make_pauli(layout, i, "x")
    jx = 0.5 * jx
    scale = system.coupling / math.sqrt(m)
    if isinstance(system, TavisCummings):
        jm = make_pauli(layout, 0, "-")
        for i in range(1, m):
            jm = jm + make_pauli(layout, i, "-")
        return scale * (a.dag() @ jm + a @ jm.dag())
    v = scale * (x @ jx)
    if isinstance(system, Hopfield):
        v = v + system.diamagnetic_factor * 2.0 * system.coupling**2 / system.qubit_freq * (x @ x)
    return v


def lamb_shift_perturbative(spec: AncillaProbe, nmax: int) -> float:
    """Second-order probe-frequency shift from ground-state moments of the ensemble."""
    system = spec.system
    if not isinstance(system, Dicke):
        raise TypeError("perturbative probe shift is defined for Dicke, Tavis-Cummings and Hopfield systems")
    w_an, w = spec.ancilla_freq, system.mode_freq
    if abs(abs(w_an) - abs(w)) < 1e-12:
        raise SingularDetuning("probe frequency equals the mode frequency")
    es = eigensystem_of(system, nmax)
    layout = es.layout
    g = es.ground_state
    a = make_destroy(layout, system.n_qubits).matrix
    xg = (a + a.conj().T) @ g
    x2 = float(np.vdot(xg, xg).real)
    v = float(np.vdot(g, _ensemble_interaction_for_shift(system, layout).matrix @ g).real)
    g2 = spec.ancilla_coupling**2
    return g2 * (1 / (w_an - w) + 1 / (w_an + w)) * x2 + g2 * (1 / (w_an - w) ** 2 - 1 / (w_an + w) ** 2) * v


@dataclass(frozen=True)
class ExactProbeShift:
    shift: float
    overlap: float
    near_crossing: bool


def lamb_shift_exact(spec: AncillaProbe, nmax: int, overlap_floor: float = 0.9) -> ExactProbeShift:
    """Probe transition shift from diagonalizing system plus probe.

    The excited level is the eigenstate with the largest overlap with
    ``|G_S> x |e>``; an overlap below ``overlap_floor`` marks a hybridized
    level near an avoided crossing.
    """
    es_sys = eigensystem_of(spec.system, nmax)
    h_tot = build_static(spec, nmax=nmax)
    w, v = np.linalg.eigh(h_tot.matrix)
    target = np.kron(es_sys.ground_state, np.array([0.0, 1.0]))
    ov = np.abs(v.conj().T @ target) ** 2
    k = int(np.argmax(ov))
    shift = float(w[k] - w[0] - spec.ancilla_freq)
    return ExactProbeShift(shift, float(ov[k]), bool(ov[k] < overlap_floor))


# ------------------------------------------------------------------ protected doublet


@dataclass(frozen=True)
class DoubletSplitting:
    exact: float
    asymptotic: float


def doublet_splitting(spec: ProtectedDicke, nmax: int) -> DoubletSplitting:
    e = np.linalg.eigvalsh(build_static(spec, nmax=nmax).matrix)
    asym = spec.qubit_freq * math.exp(-2.0 * spec.coupling**2 * spec.n_qubits / spec.mode_freq**2)
    return DoubletSplitting(float(e[1] - e[0]), asym)


def lowest_levels(spec, nmax: int, count: int) -> np.ndarray:
    return np.linalg.eigvalsh(build_static(spec, nmax=nmax).matrix)[:count]


def dispersive_resonator_shift(full_spec, reference_spec, nmax: int) -> float:
    """Difference of the qubit-ground resonator transition between two models.

    The resonator transition is ``E(|g,1>-like) - E(|g,0>-like)`` where each
    dressed level is picked by overlap with the bare product state.
    """
    def resonator(spec) -> float:
        h = build_static(spec, nmax=nmax)
        w, v = np.linalg.eigh(h.matrix)
        k0 = int(np.argmax(np.abs(v[0, :])))  # |g,0>
        k1 = int(np.argmax(np.abs(v[1, :])))  # |g,1>
        return float(w[k1] - w[k0])

    return resonator(full_spec) - resonator(reference_spec)


def sorted_overlaps(es: EigenSystem, states: Sequence[np.ndarray]) -> list[int]:
    """Index of the eigenvector with largest overlap for each given state."""
    return [int(np.argmax(np.abs(es.vectors.conj().T @ s))) for s in states]
