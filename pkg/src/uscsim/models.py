"""Hamiltonian families for light-matter coupling, built as dense operators.

Every model is a frozen dataclass.  ``build_static(spec, layout)`` returns
its time-independent Hamiltonian, ``build_driven`` the lab-frame
Hamiltonian of driven variants at a given time.  Specs round-trip through
JSON via ``spec_to_dict`` / ``spec_from_dict``; the ``model`` key carries
the tag listed in ``MODEL_TAGS``.

Frequencies are angular and share one unit; the usual choice is to measure
everything in units of the primary mode frequency.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, ClassVar

import numpy as np

from .errors import LayoutMismatch, ParseError, ResonanceMismatch, SingularDetuning
from .hilbert import (
    BosonMode,
    COperator,
    Qubit,
    SystemLayout,
    embed,
    local_destroy,
    local_pauli,
    make_create,
    make_destroy,
    make_identity,
    make_number,
    make_pauli,
    qubit_mode_layout,
)

TWO_PI = 2.0 * math.pi


def _finite(*values: float) -> None:
    for v in values:
        if not np.isfinite(v):
            raise ValueError(f"non-finite parameter {v!r}")


def _angle(v: float) -> None:
    if not 0.0 <= v < TWO_PI:
        raise ValueError(f"angle {v} outside [0, 2pi)")


def _count(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"number of emitters must be a positive integer, got {n}")


def _check_layout(layout: SystemLayout, pattern: str, what: str) -> None:
    """``pattern`` is a string of ``q``/``m`` characters, one per subsystem."""
    got = "".join("q" if isinstance(s, Qubit) else "m" for s in layout.subsystems)
    if got != pattern:
        raise LayoutMismatch(f"{what} needs subsystems {pattern!r}, layout has {got!r}")


def _quadrature(layout: SystemLayout, mode: int) -> COperator:
    a = make_destroy(layout, mode)
    return a + a.dag()


# ------------------------------------------------------------------ single qubit + mode


@dataclass(frozen=True)
class RabiModel:
    """``qubit_freq/2 sz + mode_freq a^dag a + sign*coupling sx (a + a^dag)``."""

    tag: ClassVar[str] = "QRM"
    qubit_freq: float
    mode_freq: float
    coupling: float
    sign: int = 1

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling)
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", "QRM")
        return (
            0.5 * self.qubit_freq * make_pauli(layout, 0, "z")
            + self.mode_freq * make_number(layout, 1)
            + self.sign * self.coupling * (make_pauli(layout, 0, "x") @ _quadrature(layout, 1))
        )


@dataclass(frozen=True)
class JaynesCummings:
    tag: ClassVar[str] = "JC"
    qubit_freq: float
    mode_freq: float
    coupling: float

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", "JC")
        a = make_destroy(layout, 1)
        sp = make_pauli(layout, 0, "+")
        return (
            0.5 * self.qubit_freq * make_pauli(layout, 0, "z")
            + self.mode_freq * make_number(layout, 1)
            + self.coupling * (sp @ a + sp.dag() @ a.dag())
        )


@dataclass(frozen=True)
class ACStark:
    """Dispersive limit of the JC model, valid for ``|qubit_freq - mode_freq| >> coupling``."""

    tag: ClassVar[str] = "ACStark"
    qubit_freq: float
    mode_freq: float
    coupling: float

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling)

    @property
    def detuning(self) -> float:
        return self.qubit_freq - self.mode_freq

    @property
    def dispersive_shift(self) -> float:
        if abs(self.detuning) < 1e-12:
            raise SingularDetuning("AC-Stark form needs a nonzero qubit-mode detuning")
        return self.coupling**2 / self.detuning

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", "ACStark")
        chi = self.dispersive_shift
        sz = make_pauli(layout, 0, "z")
        n = make_number(layout, 1)
        return 0.5 * (self.qubit_freq + chi) * sz + (self.mode_freq * make_identity(layout) + chi * sz) @ n


@dataclass(frozen=True)
class BlochSiegert:
    """Second-order counter-rotating correction to the JC model.

    Includes the Bloch-Siegert shift ``w_bs = g^2/(w + W)`` on both qubit and
    mode and the photon-number dependent coupling
    ``g(n) = -g (1 - n w_bs / (w + W))``.
    """

    tag: ClassVar[str] = "BlochSiegert"
    qubit_freq: float
    mode_freq: float
    coupling: float

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling)

    @property
    def shift(self) -> float:
        total = self.mode_freq + self.qubit_freq
        if abs(total) < 1e-12:
            raise SingularDetuning("Bloch-Siegert shift diverges when qubit_freq + mode_freq = 0")
        return self.coupling**2 / total

    @property
    def small_parameter(self) -> float:
        return self.coupling / (self.qubit_freq + self.mode_freq)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", "BlochSiegert")
        wbs = self.shift
        total = self.mode_freq + self.qubit_freq
        sz = make_pauli(layout, 0, "z")
        sm = make_pauli(layout, 0, "-")
        a = make_destroy(layout, 1)
        n = make_number(layout, 1)
        ident = make_identity(layout)
        g_of_n = -self.coupling * (ident - (wbs / total) * n)
        return (
            0.5 * (self.qubit_freq + wbs) * sz
            + (self.mode_freq * ident + wbs * sz) @ n
            - 0.5 * wbs * ident
            + g_of_n @ sm @ a.dag()
            + sm.dag() @ a @ g_of_n
        )


@dataclass(frozen=True)
class AnisotropicRabi:
    """Independent rotating and counter-rotating couplings."""

    tag: ClassVar[str] = "AnisotropicRabi"
    qubit_freq: float
    mode_freq: float
    coupling: float
    counter_coupling: float

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling, self.counter_coupling)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", "AnisotropicRabi")
        a = make_destroy(layout, 1)
        sp = make_pauli(layout, 0, "+")
        sm = sp.dag()
        return (
            0.5 * self.qubit_freq * make_pauli(layout, 0, "z")
            + self.mode_freq * make_number(layout, 1)
            + self.coupling * (sp @ a + sm @ a.dag())
            + self.counter_coupling * (sp @ a.dag() + sm @ a)
        )


# ------------------------------------------------------------------ ensembles


def _collective(layout: SystemLayout, n: int, axis: str) -> COperator:
    out = make_pauli(layout, 0, axis)
    for i in range(1, n):
        out = out + make_pauli(layout, i, axis)
    return out


@dataclass(frozen=True)
class Dicke:
    """``w a^dag a + W Jz + g/sqrt(N) (a + a^dag)(J+ + J-)`` with ``Jz = sum(sz)/2``."""

    tag: ClassVar[str] = "Dicke"
    n_qubits: int
    qubit_freq: float
    mode_freq: float
    coupling: float

    def __post_init__(self):
        _count(self.n_qubits)
        _finite(self.qubit_freq, self.mode_freq, self.coupling)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_qubits=self.n_qubits)

    def _base(self, layout: SystemLayout) -> tuple[COperator, COperator]:
        _check_layout(layout, "q" * self.n_qubits + "m", self.tag)
        m = self.n_qubits
        free = self.mode_freq * make_number(layout, m) + 0.5 * self.qubit_freq * _collective(layout, m, "z")
        return free, _quadrature(layout, m)

    def interaction(self, layout: SystemLayout) -> COperator:
        _, x = self._base(layout)
        return self.coupling / math.sqrt(self.n_qubits) * (x @ _collective(layout, self.n_qubits, "x"))

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        free, _ = self._base(layout)
        return free + self.interaction(layout)


@dataclass(frozen=True)
class TavisCummings(Dicke):
    tag: ClassVar[str] = "TavisCummings"

    def interaction(self, layout: SystemLayout) -> COperator:
        self._base(layout)
        m = self.n_qubits
        a = make_destroy(layout, m)
        jp = _collective(layout, m, "+")
        return self.coupling / math.sqrt(m) * (a @ jp + a.dag() @ jp.dag())


@dataclass(frozen=True)
class Hopfield(Dicke):
    """Dicke model plus the diamagnetic term ``D g^2/W (a + a^dag)^2``."""

    tag: ClassVar[str] = "Hopfield"
    diamagnetic_factor: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        _finite(self.diamagnetic_factor)
        if self.qubit_freq == 0:
            raise SingularDetuning("diamagnetic term needs a nonzero qubit frequency")

    def interaction(self, layout: SystemLayout) -> COperator:
        _, x = self._base(layout)
        dicke = Dicke.interaction(self, layout)
        return dicke + self.diamagnetic_factor * self.coupling**2 / self.qubit_freq * (x @ x)


@dataclass(frozen=True)
class ProtectedDicke:
    """``w a^dag a + W/2 sum sz + i g/sqrt(N) (a - a^dag) sum sx``.

    The ground doublet splitting closes exponentially in ``g^2 N / w^2``.
    """

    tag: ClassVar[str] = "ProtectedDicke"
    n_qubits: int
    qubit_freq: float
    mode_freq: float
    coupling: float

    def __post_init__(self):
        _count(self.n_qubits)
        _finite(self.qubit_freq, self.mode_freq, self.coupling)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_qubits=self.n_qubits)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        m = self.n_qubits
        _check_layout(layout, "q" * m + "m", self.tag)
        a = make_destroy(layout, m)
        return (
            self.mode_freq * make_number(layout, m)
            + 0.5 * self.qubit_freq * _collective(layout, m, "z")
            + (1j * self.coupling / math.sqrt(m)) * ((a - a.dag()) @ _collective(layout, m, "x"))
        )


@dataclass(frozen=True)
class TwoAtomRabi:
    """Two qubits with a tilted dipole ``cos(t) sx + sin(t) sz`` on a shared mode."""

    tag: ClassVar[str] = "TwoAtomRabi"
    qubit_freq: float
    mode_freq: float
    coupling: float
    mixing_angle: float

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling, self.mixing_angle)
        _angle(self.mixing_angle)

    @property
    def effective_coupling(self) -> float:
        """Third-order ``|gg,1> <-> |ee,0>`` coupling at the optimal angle."""
        return 16.0 / (9.0 * math.sqrt(2.0)) * (self.coupling / self.qubit_freq) ** 3 * self.qubit_freq

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_qubits=2)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qqm", self.tag)
        c, s = math.cos(self.mixing_angle), math.sin(self.mixing_angle)
        dip = c * _collective(layout, 2, "x") + s * _collective(layout, 2, "z")
        return (
            0.5 * self.qubit_freq * _collective(layout, 2, "z")
            + self.mode_freq * make_number(layout, 2)
            + self.coupling * (_quadrature(layout, 2) @ dip)
        )


# ------------------------------------------------------------------ vibronic models


@dataclass(frozen=True)
class JahnTeller:
    """E x epsilon Jahn-Teller model: one qubit, two degenerate modes."""

    tag: ClassVar[str] = "JahnTeller"
    qubit_freq: float
    mode_freq: float
    coupling: float
    phase_a: float = 0.0
    phase_b: float = 0.0

    def __post_init__(self):
        _finite(self.qubit_freq, self.mode_freq, self.coupling)
        _angle(self.phase_a)
        _angle(self.phase_b)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_modes=2)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qmm", self.tag)
        sp = make_pauli(layout, 0, "+")
        sm = sp.dag()

        def arm(phase: float) -> COperator:
            return np.exp(-1j * phase) * sp + np.exp(1j * phase) * sm

        return (
            self.mode_freq * (make_number(layout, 1) + make_number(layout, 2))
            + 0.5 * self.qubit_freq * make_pauli(layout, 0, "z")
            + self.coupling * (_quadrature(layout, 1) @ arm(self.phase_a) + _quadrature(layout, 2) @ arm(self.phase_b))
        )


@dataclass(frozen=True)
class HerzbergTeller:
    """One qubit coupled to two modes that also exchange quanta."""

    tag: ClassVar[str] = "HerzbergTeller"
    qubit_freq: float
    mode_freqs: tuple[float, float]
    couplings: tuple[float, float]
    hopping: float

    def __post_init__(self):
        object.__setattr__(self, "mode_freqs", tuple(float(x) for x in self.mode_freqs))
        object.__setattr__(self, "couplings", tuple(float(x) for x in self.couplings))
        if len(self.mode_freqs) != 2 or len(self.couplings) != 2:
            raise ValueError("HerzbergTeller needs exactly two modes")
        _finite(self.qubit_freq, self.hopping, *self.mode_freqs, *self.couplings)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_modes=2)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qmm", self.tag)
        a1, a2 = make_destroy(layout, 1), make_destroy(layout, 2)
        sx = make_pauli(layout, 0, "x")
        return (
            0.5 * self.qubit_freq * make_pauli(layout, 0, "z")
            + self.mode_freqs[0] * make_number(layout, 1)
            + self.mode_freqs[1] * make_number(layout, 2)
            + (self.couplings[0] * _quadrature(layout, 1) + self.couplings[1] * _quadrature(layout, 2)) @ sx
            + self.hopping * (a1.dag() @ a2 + a2.dag() @ a1)
        )


# ------------------------------------------------------------------ optomechanics / gates


@dataclass(frozen=True)
class OptomechanicalPair:
    """Two radiation-pressure systems whose cavities exchange photons.

    Layout order: cavity 1, mechanics 1, cavity 2, mechanics 2.
    """

    tag: ClassVar[str] = "OptomechPair"
    cavity_freq: float
    mechanical_freq: float
    radiation_pressure: float
    photon_hopping: float

    def __post_init__(self):
        _finite(self.cavity_freq, self.mechanical_freq, self.radiation_pressure, self.photon_hopping)

    def default_layout(self, nmax: int, photon_nmax: int = 1) -> SystemLayout:
        return SystemLayout((
            BosonMode(photon_nmax, "c1"), BosonMode(nmax, "m1"),
            BosonMode(photon_nmax, "c2"), BosonMode(nmax, "m2"),
        ))

    @staticmethod
    def _blocks(layout: SystemLayout) -> tuple[np.ndarray, ...]:
        _check_layout(layout, "mmmm", OptomechanicalPair.tag)
        return tuple(local_destroy(s.nmax) for s in layout.subsystems)

    def local_part(self, layout: SystemLayout) -> COperator:
        # every term acts on one side only, so Kronecker products avoid dense full-space products
        c1, m1, c2, m2 = self._blocks(layout)
        out = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
        for side, (c, m) in enumerate(((c1, m1), (c2, m2))):
            nc = c.T @ c
            nm = m.T @ m
            x = m + m.T
            one_side = (self.cavity_freq * np.kron(nc, np.eye(len(m))) + self.mechanical_freq * np.kron(np.eye(len(c)), nm)
                        + self.radiation_pressure * np.kron(nc, x))
            other = np.eye(len(c2) * len(m2)) if side == 0 else np.eye(len(c1) * len(m1))
            out += np.kron(one_side, other) if side == 0 else np.kron(other, one_side)
        return COperator(layout, out)

    def hopping_part(self, layout: SystemLayout) -> COperator:
        c1, m1, c2, m2 = self._blocks(layout)
        forward = np.kron(np.kron(c1.T, np.eye(len(m1))), np.kron(c2, np.eye(len(m2))))
        return COperator(layout, self.photon_hopping * (forward + forward.T))

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        return self.local_part(layout) + self.hopping_part(layout)


@dataclass(frozen=True)
class LongitudinalPair:
    """Two qubits with switchable longitudinal couplings to one mode.

    ``sum W_i/2 sz_i + w a^dag a - sum s_i g_i sz_i (a + a^dag)`` where the
    switch factors ``s_i`` take values in ``{-1, 0, 1}``.
    """

    tag: ClassVar[str] = "LongitudinalTwoQubit"
    qubit_freqs: tuple[float, float]
    mode_freq: float
    couplings: tuple[float, float]
    switches: tuple[int, int] = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "qubit_freqs", tuple(float(x) for x in self.qubit_freqs))
        object.__setattr__(self, "couplings", tuple(float(x) for x in self.couplings))
        object.__setattr__(self, "switches", tuple(int(x) for x in self.switches))
        _finite(self.mode_freq, *self.qubit_freqs, *self.couplings)
        if any(s not in (-1, 0, 1) for s in self.switches):
            raise ValueError("switch factors must be -1, 0 or 1")

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax, n_qubits=2)

    def with_switches(self, s1: int, s2: int) -> "LongitudinalPair":
        return LongitudinalPair(self.qubit_freqs, self.mode_freq, self.couplings, (s1, s2))

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qqm", self.tag)
        x = _quadrature(layout, 2)
        out = self.mode_freq * make_number(layout, 2)
        for i in range(2):
            sz = make_pauli(layout, i, "z")
            out = out + 0.5 * self.qubit_freqs[i] * sz - self.switches[i] * self.couplings[i] * (sz @ x)
        return out


# ------------------------------------------------------------------ probes and drives


@dataclass(frozen=True)
class AncillaProbe:
    """A probe qubit coupled to the first mode of ``system``.

    The probe is appended as the last subsystem of the system's layout.
    The optional drive ``drive_amp cos(drive_freq t) sx`` only enters
    :func:`build_driven`.
    """

    tag: ClassVar[str] = "AncillaProbe"
    system: Any
    ancilla_freq: float
    ancilla_coupling: float
    drive_amp: float = 0.0
    drive_freq: float = 0.0

    def __post_init__(self):
        _finite(self.ancilla_freq, self.ancilla_coupling, self.drive_amp, self.drive_freq)

    def default_layout(self, nmax: int) -> SystemLayout:
        inner = self.system.default_layout(nmax)
        return SystemLayout(inner.subsystems + (Qubit("probe"),))

    def inner_layout(self, layout: SystemLayout) -> SystemLayout:
        return SystemLayout(layout.subsystems[:-1])

    @property
    def probe_index(self) -> int:
        return -1

    def _lift(self, op: COperator, layout: SystemLayout) -> COperator:
        return COperator(layout, np.kron(op.matrix, np.eye(2)))

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        if not isinstance(layout.subsystems[-1], Qubit):
            raise LayoutMismatch("probe qubit must be the last subsystem")
        inner = self.inner_layout(layout)
        h_sys = self._lift(build_static(self.system, inner), layout)
        mode = inner.mode_indices[0]
        x = _quadrature(layout, mode)
        p = len(layout.subsystems) - 1
        return (
            h_sys
            + 0.5 * self.ancilla_freq * make_pauli(layout, p, "z")
            + self.ancilla_coupling * (x @ make_pauli(layout, p, "x"))
        )

    @property
    def max_frequency(self) -> float:
        return max(abs(self.ancilla_freq), abs(self.drive_freq), abs(getattr(self.system, "mode_freq", 0.0)))

    def drive_terms(self, layout: SystemLayout) -> list[tuple[Callable[[float], complex], np.ndarray]]:
        p = len(layout.subsystems) - 1
        sx = make_pauli(layout, p, "x").matrix
        amp, freq = self.drive_amp, self.drive_freq
        return [(lambda t: amp * math.cos(freq * t), sx)] if amp else []

    def drive(self, layout: SystemLayout, t: float) -> COperator:
        return _sum_terms(layout, self.drive_terms(layout), t)


@dataclass(frozen=True)
class DrivenJC:
    """JC system with two transverse qubit drives and an optional mode drive.

    Lab-frame Hamiltonian at time ``t``::

        W/2 sz + w a^dag a - g (s+ a + s- a^dag)
          - A1 (e^{i(w1 t + phase)} s- + h.c.)
          - A2 (e^{i(w2 t + phase)} s- + h.c.)
          + mode_drive (e^{i w t} a + h.c.)

    with ``A1 = carrier_amp`` at ``carrier_freq`` and ``A2 = probe_amp`` at
    ``probe_freq``.
    """

    tag: ClassVar[str] = "DrivenJC"
    qubit_freq: float
    mode_freq: float
    coupling: float
    carrier_amp: float
    carrier_freq: float
    probe_amp: float
    probe_freq: float
    phase: float = 0.0
    mode_drive: float = 0.0

    def __post_init__(self):
        _finite(
            self.qubit_freq, self.mode_freq, self.coupling, self.carrier_amp,
            self.carrier_freq, self.probe_amp, self.probe_freq, self.phase, self.mode_drive,
        )
        _angle(self.phase)

    @property
    def max_frequency(self) -> float:
        return max(abs(self.qubit_freq), abs(self.mode_freq), abs(self.carrier_freq), abs(self.probe_freq))

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        """Undriven part, i.e. the JC Hamiltonian with coupling ``-g``."""
        return JaynesCummings(self.qubit_freq, self.mode_freq, -self.coupling).hamiltonian(layout)

    def drive_terms(self, layout: SystemLayout) -> list[tuple[Callable[[float], complex], np.ndarray]]:
        """``(coefficient(t), matrix)`` pairs; their sum is the drive Hamiltonian."""
        sm = make_pauli(layout, 0, "-").matrix
        sp = sm.conj().T
        a = make_destroy(layout, 1).matrix
        ad = a.conj().T
        terms = []
        for amp, freq in ((self.carrier_amp, self.carrier_freq), (self.probe_amp, self.probe_freq)):
            if amp:
                terms.append((lambda t, A=amp, f=freq: -A * np.exp(1j * (f * t + self.phase)), sm))
                terms.append((lambda t, A=amp, f=freq: -A * np.exp(-1j * (f * t + self.phase)), sp))
        if self.mode_drive:
            xi, w = self.mode_drive, self.mode_freq
            terms.append((lambda t: xi * np.exp(1j * w * t), a))
            terms.append((lambda t: xi * np.exp(-1j * w * t), ad))
        return terms

    def drive(self, layout: SystemLayout, t: float) -> COperator:
        return _sum_terms(layout, self.drive_terms(layout), t)


@dataclass(frozen=True)
class DiracEffective:
    """``mass/2 sz + velocity/sqrt2 sy p + slope sqrt2 x`` on one qubit and one mode."""

    tag: ClassVar[str] = "DiracEffective"
    mass: float
    velocity: float
    slope: float = 0.0

    def __post_init__(self):
        _finite(self.mass, self.velocity, self.slope)

    def default_layout(self, nmax: int) -> SystemLayout:
        return qubit_mode_layout(nmax)

    def hamiltonian(self, layout: SystemLayout) -> COperator:
        _check_layout(layout, "qm", self.tag)
        a = make_destroy(layout, 1)
        x = (a + a.dag()) / math.sqrt(2)
        p = (a - a.dag()) * (-1j / math.sqrt(2))
        return (
            0.5 * self.mass * make_pauli(layout, 0, "z")
            + self.velocity / math.sqrt(2) * (make_pauli(layout, 0, "y") @ p)
            + self.slope * math.sqrt(2) * x
        )


MODEL_CLASSES = (
    RabiModel, JaynesCummings, ACStark, BlochSiegert, AnisotropicRabi, Dicke, TavisCummings,
    Hopfield, ProtectedDicke, TwoAtomRabi, JahnTeller, HerzbergTeller, OptomechanicalPair,
    LongitudinalPair, AncillaProbe, DrivenJC, DiracEffective,
)
MODEL_TAGS = {cls.tag: cls for cls in MODEL_CLASSES}


# ------------------------------------------------------------------ builders


def build_static(spec, layout: SystemLayout | None = None, nmax: int | None = None) -> COperator:
    """Time-independent Hamiltonian of ``spec``.

    Pass either an explicit ``layout`` or an ``nmax`` for the model's default
    layout.  For driven models this is the undriven part.
    """
    if layout is None:
        if nmax is None:
            raise ValueError("need a layout or an nmax")
        layout = spec.default_layout(nmax)
    return spec.hamiltonian(layout)


def _sum_terms(layout: SystemLayout, terms, t: float) -> COperator:
    out = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
    for coeff, mat in terms:
        out += coeff(t) * mat
    return COperator(layout, out)


def driven_matrix_function(spec, layout: SystemLayout) -> Callable[[float], np.ndarray]:
    """Fast ``t -> H(t)`` matrix closure with all operators precomputed."""
    static = spec.hamiltonian(layout).matrix
    terms = spec.drive_terms(layout) if hasattr(spec, "drive_terms") else []

    def h(t: float) -> np.ndarray:
        out = static.copy()
        for coeff, mat in terms:
            out += coeff(t) * mat
        return out

    return h


def build_driven(spec, layout: SystemLayout, t: float) -> COperator:
    """Lab-frame Hamiltonian of a driven model at time ``t >= 0``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if not hasattr(spec, "drive"):
        return spec.hamiltonian(layout)
    return spec.hamiltonian(layout) + spec.drive(layout, t)


def effective_qrm_of_driven(spec: DrivenJC, rtol: float = 1e-9) -> RabiModel:
    """Rabi model emulated by the doubly driven JC system in the drive frame.

    Requires ``carrier_freq - probe_freq = 2 carrier_amp``.  The result uses
    the negative-coupling sign convention of the driven form.
    """
    mismatch = (spec.carrier_freq - spec.probe_freq) - 2.0 * spec.carrier_amp
    scale = max(abs(spec.carrier_freq), abs(spec.probe_freq), abs(spec.carrier_amp), 1e-300)
    if abs(mismatch) > rtol * scale:
        raise ResonanceMismatch(
            f"carrier_freq - probe_freq = {spec.carrier_freq - spec.probe_freq!r} "
            f"but 2*carrier_amp = {2 * spec.carrier_amp!r}"
        )
    return RabiModel(
        qubit_freq=spec.probe_amp,
        mode_freq=spec.mode_freq - spec.carrier_freq,
        coupling=spec.coupling / 2.0,
        sign=-1,
    )


def driven_frame_transform(spec: DrivenJC, layout: SystemLayout, t: float) -> np.ndarray:
    """Unitary taking a lab-frame ket at time ``t`` into the frame of the effective model.

    First a rotation at the carrier frequency, then the interaction picture
    with respect to the carrier drive ``-carrier_amp sx``.
    """
    sz = make_pauli(layout, 0, "z").matrix.diagonal().real
    n = make_number(layout, 1).matrix.diagonal().real
    rot = np.exp(1j * spec.carrier_freq * t * (0.5 * sz + n))
    theta = spec.carrier_amp * t
    # exp(+i H0 t) with H0 = -A1 sx equals cos(A1 t) - i sin(A1 t) sx
    local = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * local_pauli("x")
    drive_frame = embed(layout, 0, local).matrix
    return drive_frame * rot[np.newaxis, :]


@dataclass(frozen=True)
class ColdAtomMapping:
    model: RabiModel
    coupling_over_mode: float
    coupling_over_qubit: float


def cold_atom_map(mass: float, lattice_depth: float, wave_vector: float, trap_freq: float,
                  hbar: float = 1.054571817e-34) -> ColdAtomMapping:
    """Rabi parameters of an atom in a trap plus a lattice (SI in, rad/s out)."""
    for name, v in (("mass", mass), ("lattice_depth", lattice_depth),
                    ("wave_vector", wave_vector), ("trap_freq", trap_freq)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    qubit = lattice_depth / (2.0 * hbar)
    g = 2.0 * wave_vector * math.sqrt(hbar * trap_freq / (2.0 * mass))
    model = RabiModel(qubit_freq=qubit, mode_freq=trap_freq, coupling=g)
    return ColdAtomMapping(model, g / trap_freq, g / qubit)


@dataclass(frozen=True)
class DigitalSplit:
    """Two JC-type steps whose sum is a target Rabi Hamiltonian.

    Step one is ``d a^dag a + q1/2 sz + g (a^dag s- + a s+)``; step two is the
    anti-JC ``d a^dag a - q2/2 sz + g (a^dag s+ + a s-)``, realised as a JC
    step with qubit detuning ``q2`` sandwiched by ``exp(-i pi sx/2)`` pulses.
    ``q1 - q2`` equals the target qubit frequency and ``2 d`` the target mode
    frequency.
    """

    mode_detuning: float
    qubit_detunings: tuple[float, float]
    coupling: float
    rotating_freq: float = 0.0

    @property
    def lab_qubit_freqs(self) -> tuple[float, float]:
        return tuple(self.rotating_freq + q for q in self.qubit_detunings)

    def step_one(self, layout: SystemLayout) -> COperator:
        return JaynesCummings(self.qubit_detunings[0], self.mode_detuning, self.coupling).hamiltonian(layout)

    def step_two_jc(self, layout: SystemLayout) -> COperator:
        return JaynesCummings(self.qubit_detunings[1], self.mode_detuning, self.coupling).hamiltonian(layout)

    def pulse(self, layout: SystemLayout) -> COperator:
        """``exp(-i pi sx / 2) = -i sx`` on the qubit."""
        return embed(layout, 0, -1j * local_pauli("x"))

    def step_two(self, layout: SystemLayout) -> COperator:
        p = self.pulse(layout)
        return p @ self.step_two_jc(layout) @ p.dag()


def digital_split(spec: RabiModel, rotating_freq: float = 0.0, qubit_share: float = 0.5) -> DigitalSplit:
    """Split ``spec`` into JC and anti-JC steps.

    ``qubit_share`` sets ``q1 = qubit_share * W`` (so ``q2 = q1 - W``); the
    default spreads the qubit splitting evenly over the two steps.
    """
    q1 = qubit_share * spec.qubit_freq
    return DigitalSplit(
        mode_detuning=0.5 * spec.mode_freq,
        qubit_detunings=(q1, q1 - spec.qubit_freq),
        coupling=spec.sign * spec.coupling,
        rotating_freq=rotating_freq,
    )


# ------------------------------------------------------------------ JSON


def spec_to_dict(spec) -> dict:
    out: dict[str, Any] = {"model": spec.tag}
    for f in fields(spec):
        v = getattr(spec, f.name)
        if f.name == "system":
            v = spec_to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def spec_from_dict(data: dict):
    if not isinstance(data, dict) or "model" not in data:
        raise ParseError("model spec must be an object with a 'model' key")
    data = dict(data)
    tag = data.pop("model")
    cls = MODEL_TAGS.get(tag)
    if cls is None:
        raise ParseError(f"unknown model {tag!r}; known: {sorted(MODEL_TAGS)}")
    if "system" in data:
        data["system"] = spec_from_dict(data["system"])
    for k, v in list(data.items()):
        if isinstance(v, list):
            data[k] = tuple(v)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad parameters for {tag}: {exc}") from exc
