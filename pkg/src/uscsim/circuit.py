"""Coupling-strength calculators for circuit, magnon and molecular platforms, plus table recomputation.

All inputs are SI.  Functions returning a normalised coupling return the
dimensionless ratio ``g / omega``; the rest return angular frequencies in
rad/s or SI quantities.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import ParseError

HBAR = 1.054571817e-34
PLANCK = 6.62607015e-34
E_CHARGE = 1.602176634e-19
FLUX_QUANTUM = PLANCK / (2.0 * E_CHARGE)
MU0 = 1.25663706212e-6
EPS0 = 8.8541878128e-12
K_B = 1.380649e-23
ALPHA = 7.2973525693e-3
Z_VAC = 376.730313668
GYROMAGNETIC = 2.0 * math.pi * 28e9  # rad s^-1 T^-1
REDUCED_FLUX_QUANTUM = FLUX_QUANTUM / (2.0 * math.pi)


def _positive(**values: float) -> None:
    for name, v in values.items():
        if v is None or not v > 0 or not math.isfinite(v):
            raise ValueError(f"{name} must be positive and finite, got {v!r}")


def _one_of(a, b, names: str) -> None:
    if (a is None) == (b is None):
        raise ValueError(f"give exactly one of {names}")


# ------------------------------------------------------------------ vacuum fluctuations


def vrms(omega_r: float, capacitance: float | None = None, impedance: float | None = None) -> float:
    """Ground-state r.m.s. voltage of a resonator, from its capacitance or its impedance."""
    _one_of(capacitance, impedance, "capacitance, impedance")
    _positive(omega_r=omega_r)
    if capacitance is not None:
        _positive(capacitance=capacitance)
        return math.sqrt(HBAR * omega_r / (2.0 * capacitance))
    _positive(impedance=impedance)
    return omega_r * math.sqrt(HBAR * impedance / 2.0)


def irms(omega_r: float, inductance: float | None = None, impedance: float | None = None) -> float:
    """Ground-state r.m.s. current of a resonator, from its inductance or its impedance."""
    _one_of(inductance, impedance, "inductance, impedance")
    _positive(omega_r=omega_r)
    if inductance is not None:
        _positive(inductance=inductance)
        return math.sqrt(HBAR * omega_r / (2.0 * inductance))
    _positive(impedance=impedance)
    return omega_r * math.sqrt(HBAR / (2.0 * impedance))


# ------------------------------------------------------------------ capacitive coupling


def coupling_capacitive_transmon(ej_over_ec: float, impedance: float, c_g: float, c_q: float) -> float:
    """Transmon ``g/omega_r`` through a coupling capacitor.

    Warns when ``E_J/E_C < 20``, outside the transmon regime.
    """
    _positive(ej_over_ec=ej_over_ec, impedance=impedance, c_g=c_g, c_q=c_q)
    if ej_over_ec < 20:
        warnings.warn(f"E_J/E_C = {ej_over_ec:g} is below the transmon regime (>= 20)", stacklevel=2)
    return (
        (ej_over_ec / 8.0) ** 0.25
        * math.sqrt(impedance / Z_VAC)
        * c_g / (c_g + c_q)
        * math.sqrt(ALPHA)
        / math.sqrt(2.0 * math.pi**3)
    )


def capacitive_bound(c_g: float, c_q: float, c_r: float) -> float:
    """Lumped-circuit transmon ``g/omega_r`` at resonance; always below one."""
    _positive(c_g=c_g, c_q=c_q, c_r=c_r)
    return c_g / math.sqrt(c_r * (c_q + c_g) + c_g * (c_g + c_q))


@dataclass(frozen=True)
class CPBCoupling:
    impedance_form: float
    capacitance_form: float | None

    @property
    def deep_strong_reachable(self) -> bool:
        return self.capacitance_form is not None and self.capacitance_form > 1.0


def coupling_capacitive_cpb(impedance: float, c_g: float, c_j: float, c_q: float | None = None,
                            c_r: float | None = None, ec_over_ej: float | None = None) -> CPBCoupling:
    """Cooper-pair-box ``g/omega_r`` from the impedance form and, if the circuit is given, the lumped form."""
    _positive(impedance=impedance, c_j=c_j)
    if not c_g >= 0:
        raise ValueError("c_g must be non-negative")
    z_form = math.sqrt(impedance / Z_VAC) * c_g / (c_g + c_j) * math.sqrt(ALPHA) / math.sqrt(8.0 * math.pi)
    lumped = None
    if c_q is not None and c_r is not None and ec_over_ej is not None:
        _positive(c_q=c_q, c_r=c_r, ec_over_ej=ec_over_ej)
        lumped = 2.0 * c_g / math.sqrt(c_r * (c_q + c_g) + c_g * (c_g + c_q)) * math.sqrt(ec_over_ej)
    return CPBCoupling(z_form, lumped)


# ------------------------------------------------------------------ galvanic coupling


def coupling_shared_inductor(inductance: float, persistent_current: float, omega_r: float,
                             impedance: float) -> float:
    """``g/omega_r`` with ``hbar g = L I_p I_rms`` for a shared linear inductance."""
    _positive(inductance=inductance, persistent_current=persistent_current)
    g = inductance * persistent_current * irms(omega_r, impedance=impedance) / HBAR
    return g / omega_r


def coupling_phase_transverse(omega_r: float, phase_element: float, inductance_r: float) -> float:
    """Transverse ``g`` (rad/s) from the phase matrix element ``<0|phi|1>``."""
    _positive(phase_element=phase_element)
    return irms(omega_r, inductance=inductance_r) * REDUCED_FLUX_QUANTUM * phase_element / HBAR


def coupling_phase_longitudinal(omega_r: float, phase_11: float, phase_00: float, inductance_r: float) -> float:
    """Longitudinal ``g`` (rad/s) from the diagonal phase elements."""
    return irms(omega_r, inductance=inductance_r) * 0.5 * REDUCED_FLUX_QUANTUM * (phase_11 - phase_00) / HBAR


def coupling_phase_impedance(phase_element: float, impedance: float) -> float:
    """Transverse ``g/omega_r`` written through the resonator impedance."""
    _positive(phase_element=phase_element, impedance=impedance)
    return math.sqrt(Z_VAC / (math.pi * impedance)) / math.sqrt(ALPHA) * phase_element / 8.0


def coupling_charge_embedded(c_r: float, c_q: float, l_r: float, charge_element: float) -> float:
    """``g/omega_r'`` for a charge qubit embedded in an LC resonator.

    Uses the renormalised impedance ``sqrt(L_r/C_p)`` with ``1/C_p = 1/C_r + 1/C_q``.
    """
    _positive(c_r=c_r, c_q=c_q, l_r=l_r, charge_element=charge_element)
    c_p = 1.0 / (1.0 / c_r + 1.0 / c_q)
    z_p = math.sqrt(l_r / c_p)
    return c_r / (c_q + c_r) * charge_element * math.sqrt(2.0 * math.pi * z_p / Z_VAC) * math.sqrt(ALPHA)


def inductive_energy(l_r: float) -> float:
    _positive(l_r=l_r)
    return REDUCED_FLUX_QUANTUM**2 / l_r


def coupling_transmon_galvanic(e_c: float, e_j: float, e_l: float, impedance: float) -> float:
    """``g/omega_r`` for a transmon galvanically attached to a resonator (energies in one unit)."""
    _positive(e_c=e_c, e_j=e_j, e_l=e_l, impedance=impedance)
    return (
        (e_c / (8.0 * (e_j + e_l))) ** 0.25
        * math.sqrt(Z_VAC / impedance)
        / math.sqrt(ALPHA)
        / math.sqrt(8.0 * math.pi)
    )


GALVANIC_KINDS = ("linear_inductor", "shared_junction", "charge_embedded", "transmon_resonator")


def coupling_galvanic(kind: str, **params: float) -> float:
    """Dispatch to the galvanic formula named by ``kind``; see ``GALVANIC_KINDS``."""
    if kind == "linear_inductor":
        if "phase_element" in params:
            return coupling_phase_impedance(params["phase_element"], params["impedance"])
        return coupling_shared_inductor(params["inductance"], params["persistent_current"],
                                        params["omega_r"], params["impedance"])
    if kind == "shared_junction":
        return coupling_phase_impedance(params.get("phase_element", 1.0), params["impedance"])
    if kind == "charge_embedded":
        return coupling_charge_embedded(params["c_r"], params["c_q"], params["l_r"],
                                        params.get("charge_element", 1.0))
    if kind == "transmon_resonator":
        e_l = params.get("e_l")
        if e_l is None:
            e_l = inductive_energy(params["l_r"])
        return coupling_transmon_galvanic(params["e_c"], params["e_j"], e_l, params["impedance"])
    raise ValueError(f"unknown galvanic kind {kind!r}; choose from {GALVANIC_KINDS}")


# ------------------------------------------------------------------ inductances


@dataclass(frozen=True)
class Inductances:
    geometric: float | None
    kinetic: float | None
    kinetic_from_resistance: float | None
    josephson: float | None


def geometric_inductance(length: float, width: float, thickness: float) -> float:
    _positive(length=length, width=width, thickness=thickness)
    return MU0 * length / (2.0 * math.pi) * (math.log(2.0 * length / (width + thickness)) + 0.5)


def kinetic_inductance(length: float, width: float, thickness: float, london_depth: float) -> float:
    _positive(length=length, width=width, thickness=thickness, london_depth=london_depth)
    return MU0 * london_depth**2 * length / (width * thickness)


def kinetic_inductance_from_resistance(normal_resistance: float, critical_temperature: float) -> float:
    _positive(normal_resistance=normal_resistance, critical_temperature=critical_temperature)
    return 0.14 * HBAR * normal_resistance / (K_B * critical_temperature)


def josephson_inductance(critical_current: float) -> float:
    _positive(critical_current=critical_current)
    return REDUCED_FLUX_QUANTUM / critical_current


def inductances(length: float | None = None, width: float | None = None, thickness: float | None = None,
                london_depth: float | None = None, normal_resistance: float | None = None,
                critical_temperature: float | None = None, critical_current: float | None = None) -> Inductances:
    """Every inductance computable from the supplied geometry and material data."""
    wire = None not in (length, width, thickness)
    return Inductances(
        geometric_inductance(length, width, thickness) if wire else None,
        kinetic_inductance(length, width, thickness, london_depth) if wire and london_depth else None,
        kinetic_inductance_from_resistance(normal_resistance, critical_temperature)
        if normal_resistance and critical_temperature else None,
        josephson_inductance(critical_current) if critical_current else None,
    )


# ------------------------------------------------------------------ spin and molecular ensembles


@dataclass(frozen=True)
class MagnonParams:
    cavity_freq: float  # rad/s
    mode_volume: float  # m^3
    n_spins: float
    overlap: float = 1.0

    def __post_init__(self):
        _positive(cavity_freq=self.cavity_freq, mode_volume=self.mode_volume, n_spins=self.n_spins,
                  overlap=self.overlap)
        if self.overlap > 1.0:
            raise ValueError("overlap factor must not exceed 1")


@dataclass(frozen=True)
class EnsembleCoupling:
    single: float
    collective: float


def coupling_magnon(p: MagnonParams) -> EnsembleCoupling:
    """Single-spin and collective magnon-photon coupling (rad/s)."""
    b_rms = math.sqrt(MU0 * HBAR * p.cavity_freq / (2.0 * p.mode_volume))
    g0 = p.overlap * GYROMAGNETIC * b_rms
    return EnsembleCoupling(g0, g0 * math.sqrt(p.n_spins))


@dataclass(frozen=True)
class MoleculeParams:
    dipole: float  # C m, single molecule
    n_molecules: float
    cavity_freq: float  # rad/s
    mode_volume: float  # m^3
    permittivity: float = EPS0

    def __post_init__(self):
        _positive(dipole=self.dipole, n_molecules=self.n_molecules, cavity_freq=self.cavity_freq,
                  mode_volume=self.mode_volume, permittivity=self.permittivity)


def coupling_molecule(p: MoleculeParams) -> EnsembleCoupling:
    """Single-molecule and collective dipole coupling (rad/s)."""
    field_rms = math.sqrt(HBAR * p.cavity_freq / (2.0 * p.permittivity * p.mode_volume))
    g0 = p.dipole * field_rms / HBAR
    return EnsembleCoupling(g0, g0 * math.sqrt(p.n_molecules))


# ------------------------------------------------------------------ figure of merit

CONVENTIONS = {"C4": 4.0, "C1": 1.0}


def cooperativity(g: float, kappa: float, gamma: float, convention: str = "C4") -> float:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {sorted(CONVENTIONS)}")
    _positive(kappa=kappa, gamma=gamma)
    return CONVENTIONS[convention] * g * g / (kappa * gamma)


def figure_of_merit_U(g: float, omega: float, kappa: float, gamma: float, convention: str = "C4") -> float:
    """Geometric mean of cooperativity and normalised coupling, ``sqrt(C g / omega)``."""
    _positive(omega=omega)
    return math.sqrt(cooperativity(g, kappa, gamma, convention) * g / omega)


# ------------------------------------------------------------------ tables

TABLE_COLUMNS = ("ref", "platform", "gamma", "kappa", "g", "omega0", "unit",
                 "printed_g_over_omega_pct", "printed_U", "notes")
UNITS = {"MHz": 2.0 * math.pi * 1e6, "GHz": 2.0 * math.pi * 1e9, "meV": 1e-3 * E_CHARGE / HBAR}
QUALIFIERS = ("<", ">", "~")
DEVIATION_FLAG = 0.05
G_RATIO_RTOL = 0.01
U_RTOL = 0.03


@dataclass(frozen=True)
class Quantity:
    """A printed number with its optional qualifier and count of decimals."""

    value: float
    qualifier: str = ""
    decimals: int = 0

    @property
    def half_unit(self) -> float:
        return 0.5 * 10.0 ** (-self.decimals)


def parse_quantity(text: str, line: int, column: int) -> Quantity | None:
    text = text.strip()
    if text in ("", "-"):
        return None
    qualifier = ""
    if text[0] in QUALIFIERS:
        qualifier, text = text[0], text[1:].strip()
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line=line, column=column) from None
    if value < 0:
        raise ParseError(f"negative value {value}", line=line, column=column)
    decimals = len(text.split(".")[1]) if "." in text else 0
    return Quantity(value, qualifier, decimals)


@dataclass(frozen=True)
class ExperimentRecord:
    ref: str
    platform: str
    gamma: Quantity | None
    kappa: Quantity | None
    g: Quantity | None
    omega0: Quantity | None
    unit: str
    printed_g_over_omega_pct: Quantity | None
    printed_U: Quantity | None
    notes: str = ""

    def angular(self, name: str) -> float | None:
        q = getattr(self, name)
        return None if q is None else q.value * UNITS[self.unit]


def ingest_table(source: str | Path | io.TextIOBase) -> list[ExperimentRecord]:
    """Read a table CSV (path, file object or bundled name ``table1``/``table2``)."""
    if isinstance(source, io.TextIOBase):
        text = source.read()
    elif isinstance(source, str) and source in ("table1", "table2"):
        text = resources.files("uscsim").joinpath("data", f"{source}.csv").read_text()
    else:
        text = Path(source).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty table", line=1) from None
    if tuple(h.strip() for h in header) != TABLE_COLUMNS:
        raise ParseError(f"header must be {','.join(TABLE_COLUMNS)}", line=1)
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(TABLE_COLUMNS):
            raise ParseError(f"expected {len(TABLE_COLUMNS)} fields, got {len(row)}", line=lineno)
        cells = dict(zip(TABLE_COLUMNS, row))
        unit = cells["unit"].strip()
        if unit not in UNITS:
            raise ParseError(f"unit must be one of {sorted(UNITS)}", line=lineno,
                             column=TABLE_COLUMNS.index("unit") + 1)
        nums = {
            name: parse_quantity(cells[name], lineno, TABLE_COLUMNS.index(name) + 1)
            for name in ("gamma", "kappa", "g", "omega0", "printed_g_over_omega_pct", "printed_U")
        }
        records.append(ExperimentRecord(ref=cells["ref"].strip(), platform=cells["platform"].strip(),
                                        unit=unit, notes=cells["notes"].strip(), **nums))
    return records


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else math.inf


@dataclass
class RowReport:
    ref: str
    g_over_omega_pct: float | None
    g_over_omega_deviation: float | None
    g_over_omega_ok: bool | None
    U_C1: float | None
    U_C4: float | None
    printed_U: float | None
    U_deviation_C1: float | None
    U_deviation_C4: float | None
    U_ok: bool | None
    qualified: bool
    flags: list[str] = field(default_factory=list)


@dataclass
class TableReport:
    convention: str
    caption_convention: str
    rows: list[RowReport]
    matches: dict[str, int]
    convention_conflict: bool

    @property
    def all_g_ratios_ok(self) -> bool:
        return all(r.g_over_omega_ok for r in self.rows if r.g_over_omega_ok is not None)

    @property
    def all_U_ok(self) -> bool:
        return all(r.U_ok for r in self.rows if r.U_ok is not None)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def recompute_and_report(records: Iterable[ExperimentRecord], convention: str = "auto",
                         caption_convention: str = "C4") -> TableReport:
    """Recompute ``g/omega`` and ``U`` for every row and compare with the printed values.

    ``g/omega`` passes within 1% or half a unit of the last printed digit,
    whichever is larger.  ``U`` passes within 3% under the selected
    convention; ``auto`` picks whichever of C1/C4 matches more rows.  Rows
    deviating by more than 5% are flagged, and ``convention_conflict`` is set
    when the selected convention differs from ``caption_convention``.
    """
    records = list(records)
    rows = []
    for rec in records:
        qualified = any(getattr(rec, n) is not None and getattr(rec, n).qualifier
                        for n in ("gamma", "kappa", "g", "omega0", "printed_U"))
        ratio = dev = ok = None
        if rec.g is not None and rec.omega0 is not None:
            ratio = 100.0 * rec.g.value / rec.omega0.value
            p = rec.printed_g_over_omega_pct
            if p is not None:
                dev = _rel(ratio, p.value)
                ok = abs(ratio - p.value) <= max(G_RATIO_RTOL * p.value, p.half_unit)
        u1 = u4 = d1 = d4 = None
        if None not in (rec.g, rec.omega0, rec.kappa, rec.gamma):
            args = (rec.g.value, rec.omega0.value, rec.kappa.value, rec.gamma.value)
            u1, u4 = figure_of_merit_U(*args, "C1"), figure_of_merit_U(*args, "C4")
            if rec.printed_U is not None:
                d1, d4 = _rel(u1, rec.printed_U.value), _rel(u4, rec.printed_U.value)
        rows.append(RowReport(rec.ref, ratio, dev, ok, u1, u4,
                              None if rec.printed_U is None else rec.printed_U.value,
                              d1, d4, None, qualified))
    matches = {
        "C1": sum(1 for r in rows if r.U_deviation_C1 is not None and r.U_deviation_C1 <= U_RTOL),
        "C4": sum(1 for r in rows if r.U_deviation_C4 is not None and r.U_deviation_C4 <= U_RTOL),
    }
    chosen = convention
    if convention == "auto":
        chosen = "C1" if matches["C1"] > matches["C4"] else "C4"
    elif convention not in CONVENTIONS:
        raise ValueError("convention must be auto, C1 or C4")
    for r in rows:
        d = r.U_deviation_C1 if chosen == "C1" else r.U_deviation_C4
        if d is not None:
            r.U_ok = d <= U_RTOL
            if d > DEVIATION_FLAG:
                r.flags.append(f"U deviates {100 * d:.1f}% under {chosen}")
        if r.g_over_omega_deviation is not None and r.g_over_omega_deviation > DEVIATION_FLAG:
            r.flags.append(f"g/omega deviates {100 * r.g_over_omega_deviation:.1f}%")
        if r.qualified:
            r.flags.append("bound or approximate inputs")
    return TableReport(chosen, caption_convention, rows, matches, chosen != caption_convention)
