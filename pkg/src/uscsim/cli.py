"""Command-line front end: ``uscsim <subcommand> --spec config.json``.

Every output starts with a ``#`` comment holding the library version and the
fully resolved configuration.  Floats are written with 17 significant
digits so identical configurations give byte-identical files.

Exit codes: 0 success, 2 unreadable input, 3 numerical failure,
4 violated precondition.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import circuit, dynamics, open_systems, protocols, spectra
from .errors import (
    CommensurabilityError,
    InvalidState,
    InvalidSubsystem,
    InvalidTruncation,
    LayoutMismatch,
    LoopNotClosed,
    NonUniqueSteadyState,
    NotHermitian,
    ParseError,
    ResonanceMismatch,
    SingularDetuning,
    StepTooCoarse,
    TruncationLeak,
)
from .hilbert import basis_state, make_number, parity_operator
from .models import (
    MODEL_TAGS,
    DiracEffective,
    DrivenJC,
    LongitudinalPair,
    OptomechanicalPair,
    RabiModel,
    spec_from_dict,
)
from .version import __version__

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4
DEFAULT_NMAX = 40
PROTOCOLS = ("ghz", "cphase", "noon", "dirac")

NUMERIC_ERRORS = (NotHermitian, LoopNotClosed, NonUniqueSteadyState, TruncationLeak, np.linalg.LinAlgError,
                  FloatingPointError)
PRECONDITION_ERRORS = (StepTooCoarse, ResonanceMismatch, SingularDetuning, CommensurabilityError,
                       InvalidTruncation, LayoutMismatch, InvalidSubsystem, InvalidState, ValueError)


@dataclass
class RunConfig:
    subcommand: str
    spec: dict
    out: str | None = None
    format: str = "csv"
    nmax: int = DEFAULT_NMAX
    jobs: int = 1
    seed: int = 0
    protocol: str | None = None

    def header(self) -> str:
        resolved = {k: v for k, v in asdict(self).items() if k != "out"}
        return f"# uscsim {__version__} config={json.dumps(resolved, sort_keys=True, separators=(',', ':'))}"


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    meta: dict = field(default_factory=dict)


# ------------------------------------------------------------------ formatting


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format(x, ".17g")
    if x is None:
        return "null"
    return str(x)


def to_json(obj: Any, indent: int = 0) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json([obj.real, obj.imag], indent)
    return fmt(obj)


def render(config: RunConfig, payload: Table | dict) -> str:
    lines = [config.header()]
    if config.format == "json":
        if isinstance(payload, Table):
            doc = dict(payload.meta)
            doc["columns"] = payload.columns
            doc["rows"] = payload.rows
        else:
            doc = payload
        lines.append(to_json(doc))
    else:
        if isinstance(payload, dict):
            payload = Table(["key", "value"], [[k, v] for k, v in sorted(_flatten(payload).items())])
        lines.append(",".join(payload.columns))
        lines.extend(",".join(fmt(v) for v in row) for row in payload.rows)
    return "\n".join(lines) + "\n"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            out[key] = " ".join(fmt(x) for x in v)
        else:
            out[key] = v
    return out


# ------------------------------------------------------------------ helpers


def _model(cfg: RunConfig, key: str = "model"):
    data = cfg.spec.get(key)
    if isinstance(data, dict):
        return spec_from_dict(data)
    # flat form: model fields sit beside the run settings, so keep only the model's own fields
    cls = MODEL_TAGS.get(data)
    if cls is None:
        return spec_from_dict(cfg.spec)
    names = {f.name for f in fields(cls)}
    return spec_from_dict({k: v for k, v in cfg.spec.items() if k in names or k == "model"})


def _require(spec, cls, what: str):
    if not isinstance(spec, cls):
        raise ValueError(f"{what} needs a {cls.tag} model, got {spec.tag}")
    return spec


def _initial_state(layout, labels):
    return basis_state(layout, labels if labels is not None else ["g", 0])


# ------------------------------------------------------------------ subcommands


def cmd_spectrum(cfg: RunConfig) -> Table:
    spec = _model(cfg)
    levels = int(cfg.spec.get("levels", 10))
    es = spectra.eigensystem_of(spec, cfg.nmax)
    rows = [[k, es.energies[k], es.parity_labels[k]] for k in range(min(levels, len(es.energies)))]
    meta = {"model": spec.tag}
    g, w = getattr(spec, "coupling", None), getattr(spec, "mode_freq", None)
    if isinstance(g, (int, float)) and isinstance(w, (int, float)) and w > 0:
        regime = spectra.classify_regime(g, w)
        meta["regime"] = regime.label
        meta["coupling_ratio"] = regime.ratio
    return Table(["index", "energy", "parity"], rows, meta)


def cmd_dynamics(cfg: RunConfig) -> Table:
    spec = _model(cfg)
    layout = spec.default_layout(cfg.nmax)
    psi0 = _initial_state(layout, cfg.spec.get("initial"))
    grid = dynamics.TimeGrid(float(cfg.spec.get("t0", 0.0)), float(cfg.spec["t1"]), int(cfg.spec.get("n_steps", 200)))
    observable = cfg.spec.get("observable", "return")
    h = spec.hamiltonian(layout)
    if observable == "return":
        res = dynamics.propagate_static(h, psi0, grid)
        values = np.abs(res.states @ psi0.conj())
    elif observable == "photons":
        values = dynamics.propagate_static(h, psi0, grid, {"n": make_number(layout, layout.mode_indices[0])},
                                           store_states=False).observables["n"]
    elif observable == "parity":
        values = dynamics.propagate_static(h, psi0, grid, {"p": parity_operator(layout, None, None)},
                                           store_states=False).observables["p"]
    else:
        raise ValueError(f"unknown observable {observable!r}; use return, photons or parity")
    return Table(["t", "value"], [[t, v] for t, v in zip(grid.times, np.real(values))], {"observable": observable})


def cmd_master(cfg: RunConfig) -> dict:
    spec = _require(_model(cfg), RabiModel, "master")
    lb = open_systems.LindbladSpec(**cfg.spec.get("lindblad", {"kappa": 0.01, "gamma": 0.01, "gamma_phi": 0.0}))
    form = cfg.spec.get("form", "dressed")
    layout = spec.default_layout(cfg.nmax)
    h = spec.hamiltonian(layout)
    es = spectra.eigensystem(h)
    n_op = make_number(layout, 1)
    ground_n = float(np.real(es.ground_state.conj() @ n_op.matrix @ es.ground_state))
    out = {"form": form, "ground_photons": ground_n}
    if form == "standard":
        rho = open_systems.steady_state(open_systems.standard_liouvillian(h, lb))
        rho_eigen = open_systems.to_eigenbasis(es, rho)
    elif form == "dressed":
        levels = int(cfg.spec.get("levels", min(16, layout.total_dim)))
        es = es.truncated(levels)
        rates = open_systems.dressed_rates(es, lb)
        rho_eigen = open_systems.steady_state(open_systems.dressed_liouvillian(es, rates))
        rho = open_systems.from_eigenbasis(es, rho_eigen)
        out["levels"] = levels
    else:
        raise ValueError("form must be standard or dressed")
    steady_n = float(np.real(np.trace(n_op.matrix @ rho)))
    emission = open_systems.output_emission_operator(es.truncated(rho_eigen.shape[0]))
    out.update({
        "steady_photons": steady_n,
        "excess_photons": steady_n - ground_n,
        "steady_flux": emission.flux(rho_eigen[: emission.eigenbasis.shape[0], : emission.eigenbasis.shape[0]]),
        "ground_population": float(np.real(rho_eigen[0, 0])),
    })
    return out


def _trotter_point(args) -> tuple[int, float]:
    spec, total, n, nmax = args
    split = dynamics.digital_split(spec)
    res = dynamics.trotter_evolve(dynamics.TrotterPlan(split, total, n), spec, nmax=nmax)
    return n, res.infidelity


def cmd_trotter(cfg: RunConfig) -> Table:
    spec = _require(_model(cfg), RabiModel, "trotter")
    total = float(cfg.spec.get("time", 2.0 * math.pi))
    steps = [int(n) for n in cfg.spec.get("steps", [8, 16, 32, 64, 128])]
    work = [(spec, total, n, cfg.nmax) for n in steps]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_trotter_point, work))
    else:
        results = [_trotter_point(w) for w in work]
    results.sort()
    meta = {}
    positive = [(n, e) for n, e in results if e > 0]
    if len(positive) >= 2:
        meta["slope"] = dynamics.loglog_slope(*zip(*positive))
    return Table(["n", "infidelity"], [list(r) for r in results], meta)


def cmd_analog(cfg: RunConfig) -> Table:
    spec = _require(_model(cfg), DrivenJC, "analog-compare")
    res = dynamics.analog_compare(spec, nmax=cfg.nmax, duration=cfg.spec.get("duration"),
                                  n_samples=int(cfg.spec.get("samples", 100)))
    return Table(["t", "fidelity"], [[t, f] for t, f in zip(res.times, res.fidelities)],
                 {"min_fidelity": res.min_fidelity})


def cmd_protocols(cfg: RunConfig) -> Table | dict:
    name = cfg.protocol
    s = cfg.spec
    if name == "ghz":
        r = protocols.ghz_protocol(int(s.get("n_qubits", 2)), float(s["coupling"]), float(s.get("mode_freq", 1.0)),
                                   nmax=cfg.nmax, time=s.get("time"))
        return {"fidelity": r.fidelity, "conjugate_phase_fidelity": r.conjugate_phase_fidelity, "time": r.time,
                "loops": r.loops, "commensurate": r.commensurate, "qubit_purity": r.qubit_purity}
    if name == "cphase":
        spec = _require(_model(cfg), LongitudinalPair, "cphase")
        r = protocols.cphase_sequence(spec, float(s["t1"]), nmax=cfg.nmax)
        return {"entangling_phase": r.entangling_phase, "predicted_phase": r.predicted_phase,
                "process_fidelity": r.process_fidelity, "qubit_purity": r.qubit_purity}
    if name == "noon":
        spec = _require(_model(cfg), OptomechanicalPair, "noon")
        r = protocols.noon_protocol(spec, int(s.get("n_target", 2)), nmax=s.get("nmax_phonon"),
                                    mixing_angle=float(s.get("mixing_angle", math.pi / 4)))
        return {"fidelity": r.fidelity, "alpha": r.alpha, "beta": r.beta, "hop_time": r.hop_time,
                "effective_hopping": r.effective_hopping}
    if name == "dirac":
        spec = _require(_model(cfg), DiracEffective, "dirac")
        internal = np.array([complex(*c) if isinstance(c, list) else complex(c) for c in s.get("internal", [1, 0])])
        grid = dynamics.TimeGrid(0.0, float(s["t1"]), int(s.get("n_steps", 200)))
        r = protocols.dirac_observables(spec, float(s.get("position", 0.0)), float(s.get("momentum", 0.0)),
                                        internal, grid, nmax=cfg.nmax)
        return Table(["t", "x", "p"], [[t, x, p] for t, x, p in zip(r.times, r.position, r.momentum)])
    raise ValueError(f"protocol must be one of {PROTOCOLS}")


CIRCUIT_FORMULAS: dict[str, Callable[..., Any]] = {
    "vrms": circuit.vrms,
    "irms": circuit.irms,
    "capacitive_transmon": circuit.coupling_capacitive_transmon,
    "capacitive_bound": circuit.capacitive_bound,
    "capacitive_cpb": circuit.coupling_capacitive_cpb,
    "galvanic": circuit.coupling_galvanic,
    "inductances": circuit.inductances,
    "magnon": lambda **p: circuit.coupling_magnon(circuit.MagnonParams(**p)),
    "molecule": lambda **p: circuit.coupling_molecule(circuit.MoleculeParams(**p)),
    "figure_of_merit": circuit.figure_of_merit_U,
}


def cmd_circuit(cfg: RunConfig) -> dict:
    name = cfg.spec.get("formula")
    if name not in CIRCUIT_FORMULAS:
        raise ValueError(f"formula must be one of {sorted(CIRCUIT_FORMULAS)}")
    result = CIRCUIT_FORMULAS[name](**cfg.spec.get("params", {}))
    if hasattr(result, "__dataclass_fields__"):
        result = asdict(result)
    return {"formula": name, "result": result}


def cmd_tables(cfg: RunConfig) -> Table | dict:
    source = cfg.spec.get("table", "table1")
    report = circuit.recompute_and_report(circuit.ingest_table(source), cfg.spec.get("convention", "auto"))
    doc = asdict(report)
    if cfg.format == "json":
        return doc
    cols = ["ref", "g_over_omega_pct", "g_over_omega_ok", "U_C1", "U_C4", "printed_U", "U_ok", "flags"]
    rows = [[getattr(r, c) if c != "flags" else "; ".join(r.flags) for c in cols] for r in report.rows]
    return Table(cols, rows, {"convention": report.convention, "convention_conflict": report.convention_conflict})


COMMANDS: dict[str, Callable[[RunConfig], Table | dict]] = {
    "spectrum": cmd_spectrum,
    "dynamics": cmd_dynamics,
    "master": cmd_master,
    "trotter": cmd_trotter,
    "analog-compare": cmd_analog,
    "protocols": cmd_protocols,
    "circuit": cmd_circuit,
    "tables": cmd_tables,
}


# ------------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uscsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"uscsim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "protocols":
            p.add_argument("protocol", choices=PROTOCOLS)
        p.add_argument("--spec", help="JSON configuration file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--nmax", type=int, default=None, help="Fock truncation (default: $USCSIM_NMAX or 40)")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--dry-run", action="store_true", help="print the resolved plan and exit")
    return parser


def load_spec(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object", line=1, column=1)
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    spec = load_spec(args.spec)
    nmax = args.nmax
    if nmax is None:
        nmax = spec.get("nmax")
    if nmax is None:
        env = os.environ.get("USCSIM_NMAX")
        if env is not None:
            try:
                nmax = int(env)
            except ValueError:
                raise ParseError(f"USCSIM_NMAX must be an integer, got {env!r}") from None
    if nmax is None:
        nmax = DEFAULT_NMAX
    if int(nmax) < 1:
        raise InvalidTruncation(f"nmax must be >= 1, got {nmax}")
    fmt_default = "json" if args.subcommand in ("tables",) else "csv"
    return RunConfig(
        subcommand=args.subcommand,
        spec=spec,
        out=args.out,
        format=args.format or fmt_default,
        nmax=int(nmax),
        jobs=max(1, args.jobs),
        seed=args.seed,
        protocol=getattr(args, "protocol", None),
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        if args.dry_run:
            sys.stdout.write(cfg.header() + "\n")
            sys.stdout.write(f"# plan: run {cfg.subcommand}"
                             + (f" {cfg.protocol}" if cfg.protocol else "")
                             + f" with nmax={cfg.nmax}, jobs={cfg.jobs}, format={cfg.format}\n")
            return EXIT_OK
        text = render(cfg, COMMANDS[cfg.subcommand](cfg))
    except (ParseError, KeyError, TypeError, OSError) as exc:
        sys.stderr.write(f"uscsim: input error: {exc}\n")
        return EXIT_PARSE
    except NUMERIC_ERRORS as exc:
        sys.stderr.write(f"uscsim: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except PRECONDITION_ERRORS as exc:
        sys.stderr.write(f"uscsim: precondition violated: {exc}\n")
        return EXIT_PRECONDITION
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
