"""Command-line entry point: ``vibsim <subcommand> [options]``.

Every output starts with a header carrying the tool version, a SHA-256 of the
resolved configuration and the unit system. Exit codes: 0 success, 2 invalid
configuration or input, 3 numerical failure. Errors are printed to stderr as a
single JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import number_operator, observable_trajectory
from .encoding import EncodingError, basis_index, qubit_count, vibrational_modes
from .forcefield import BUNDLED, ForceField, ForceFieldError, load_bundled, parse_force_field
from .hamiltonian import (
    REFERENCE_TERM_COUNTS,
    HamiltonianError,
    build_qubit_hamiltonian,
    exact_eigh,
    harmonic_levels,
    term_count_report,
)
from .franck_condon import DuschinskyData, FranckCondonError, fc_table
from .serialize import HARTREE_TO_CM1, csv_text, json_text, output_stream
from .statevector import basis_state
from .uvcc import HARMONIC_GROUND, UvccError, VqeDivergence, VqeOptions, build_circuit, vqe_minimize
from .vscf import vscf

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def load_force_field(spec: str) -> ForceField:
    """A path to a JSON file, or the name of a bundled force field."""
    p = Path(spec)
    if p.exists():
        return parse_force_field(p)
    if spec.lower().removesuffix(".json") in BUNDLED:
        return load_bundled(spec)
    raise ConfigError(f"force field {spec!r} not found (bundled: {', '.join(BUNDLED)})")


def _load_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path!r} is not valid JSON: {exc}") from exc


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common(p: argparse.ArgumentParser, levels: int = 4):
    p.add_argument("--ff", default="h2o", help="force-field JSON path or bundled name (h2o, so2)")
    p.add_argument("--d", type=_positive_int, default=levels, help="levels per mode")
    p.add_argument("--scheme", choices=["direct", "compact"], default="compact")
    p.add_argument("--order", type=int, choices=[2, 3, 4], default=4, help="potential expansion order")
    p.add_argument("--no-zero-point", action="store_true", help="drop the constant zero-point term")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vibsim", description="Qubit simulation of molecular vibrations.")
    parser.add_argument("--version", action="version", version=f"vibsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="exact eigenvalues of the encoded Hamiltonian (CSV)")
    _common(p)
    p.add_argument("--n-levels", type=_positive_int, default=None, help="number of lowest levels to print")
    p.add_argument("--cm1", action="store_true", help="add columns converted to cm^-1")

    p = sub.add_parser("vscf", help="vibrational self-consistent field (JSON)")
    _common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--damping", type=float, default=0.0)

    p = sub.add_parser("vqe", help="UVCC ansatz with gradient-descent VQE (JSON trace)")
    _common(p, levels=2)
    p.add_argument("--rank", type=int, choices=[1, 2], default=2)
    p.add_argument("--reference", choices=["harmonic_ground", "vscf"], default="harmonic_ground")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--grad-eps", type=float, default=1e-4)
    p.add_argument("--grad-tol", type=float, default=1e-9)
    p.add_argument("--init-perturbation", type=float, default=0.01)
    p.add_argument("--pure-gd", action="store_true", help="fixed step, no halving on energy increase")

    p = sub.add_parser("dynamics", help="Trotterised time evolution (CSV of mode populations)")
    _common(p, levels=2)
    p.add_argument("--initial", default=None, help="comma-separated initial occupations (default all zero)")
    p.add_argument("--localization", default=None, help="JSON file with {'U': [[...]]} for localized modes")
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--n-times", type=_positive_int, default=11)
    p.add_argument("--steps-per-unit", type=float, default=1.0, help="Trotter steps per atomic time unit")

    p = sub.add_parser("franck-condon", help="Franck-Condon factors between two surfaces (CSV)")
    p.add_argument("--ff-initial", required=True)
    p.add_argument("--ff-final", required=True)
    p.add_argument("--duschinsky", required=True, help="JSON file with {'U': [[...]], 'd': [...]}")
    p.add_argument("--d", type=_positive_int, default=8)
    p.add_argument("--n-initial", type=_positive_int, default=1)
    p.add_argument("--n-final", type=_positive_int, default=6)
    p.add_argument("--route", choices=["doktorov", "transformed"], default="doktorov")
    p.add_argument("--reference-frequency", default="auto", help="'auto' or a positive number")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("encode-info", help="qubit counts and Hamiltonian term counts (JSON)")
    p.add_argument("--atoms", type=_positive_int, default=3)
    p.add_argument("--linear", action="store_true")
    p.add_argument("--d", type=_positive_int, nargs="+", default=[2, 4])
    p.add_argument("--ff", nargs="*", default=None, help="force fields whose term counts to report")
    p.add_argument("-o", "--output", default="-")
    return parser


def resolved_config(args: argparse.Namespace) -> dict:
    """Every parsed option except the output destination."""
    return {k: v for k, v in vars(args).items() if k != "output"}


# ---------------------------------------------------------------------------
# subcommands


def _hamiltonian(args, ff, localization=None):
    if args.d < 2:
        raise ConfigError("--d must be at least 2")
    return build_qubit_hamiltonian(
        ff, args.scheme, args.d, args.order, zero_point=not args.no_zero_point, localization=localization
    )


def cmd_spectrum(args, cfg) -> str:
    ff = load_force_field(args.ff)
    h = _hamiltonian(args, ff)
    evals, _ = exact_eigh(h)
    harm = harmonic_levels(ff.omega, args.d, zero_point=not args.no_zero_point)
    n = len(evals) if args.n_levels is None else min(args.n_levels, len(evals))
    columns = ["index", "energy_hartree", "energy_relative_to_ground", "harmonic_hartree"]
    if args.cm1:
        columns += ["energy_cm1", "energy_relative_to_ground_cm1", "harmonic_cm1"]
    rows = []
    for k in range(n):
        row = [k, float(evals[k]), float(evals[k] - evals[0]), float(harm[k])]
        if args.cm1:
            row += [evals[k] * HARTREE_TO_CM1, (evals[k] - evals[0]) * HARTREE_TO_CM1, harm[k] * HARTREE_TO_CM1]
        rows.append(row)
    return csv_text(cfg, columns, rows)


def cmd_vscf(args, cfg) -> str:
    ff = load_force_field(args.ff)
    h = _hamiltonian(args, ff)
    if not 0 <= args.damping < 1:
        raise ConfigError("--damping must lie in [0, 1)")
    res = vscf(h.second_quantized, ff.modes, args.d, tol=args.tol, max_iter=args.max_iter, damping=args.damping)
    exact = float(exact_eigh(h)[0][0])
    payload = {"vscf": res.to_json_dict(), "exact_ground_hartree": exact, "modes": ff.modes}
    return json_text(cfg, payload)


def cmd_vqe(args, cfg) -> str:
    ff = load_force_field(args.ff)
    h = _hamiltonian(args, ff)
    ref_state = None
    if args.reference != HARMONIC_GROUND:
        ref_state = vscf(h.second_quantized, ff.modes, args.d).state(h.scheme)
    circuit = build_circuit(None, h.scheme, args.rank, args.reference, ref_state)
    opt = VqeOptions(
        step=args.step,
        max_iter=args.max_iter,
        grad_eps=args.grad_eps,
        grad_tol=args.grad_tol,
        init_perturbation=args.init_perturbation,
        seed=args.seed,
        pure_gd=args.pure_gd,
    )
    res = vqe_minimize(h, circuit, opt)
    exact = float(exact_eigh(h)[0][0])
    payload = {
        "result": res.to_json_dict(circuit.parameter_keys),
        "exact_ground_hartree": exact,
        "error_hartree": res.energy - exact,
        "gates": circuit.describe(),
        "n_parameters": circuit.n_parameters,
    }
    return json_text(cfg, payload)


def _occupations(text, modes, d):
    if text is None:
        return [0] * modes
    try:
        occ = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--initial must be comma-separated integers, got {text!r}") from exc
    if len(occ) != modes or not all(0 <= s < d for s in occ):
        raise ConfigError(f"--initial needs {modes} occupations in 0..{d - 1}")
    return occ


def cmd_dynamics(args, cfg) -> str:
    ff = load_force_field(args.ff)
    U = None
    if args.localization:
        data = _load_json(args.localization, "localization")
        if not isinstance(data, dict) or "U" not in data:
            raise ConfigError("localization file needs a 'U' entry")
        U = np.asarray(data["U"], dtype=float)
    h = _hamiltonian(args, ff, U)
    occ = _occupations(args.initial, ff.modes, args.d)
    s0 = basis_state(basis_index(occ, h.scheme), h.n_qubits)
    if args.t_max < 0 or args.steps_per_unit <= 0:
        raise ConfigError("--t-max must be >= 0 and --steps-per-unit positive")
    times = np.linspace(0.0, args.t_max, args.n_times)
    observables = [number_operator(h, m) for m in range(ff.modes)] + [h.qubit_form]
    table = observable_trajectory(s0, h, observables, times, args.steps_per_unit)
    columns = ["time"] + [f"n_{m}" for m in range(ff.modes)] + ["energy_hartree"]
    rows = [[float(t)] + [float(v) for v in vals] for t, vals in zip(times, table)]
    return csv_text(cfg, columns, rows)


def cmd_franck_condon(args, cfg) -> str:
    ff_i = load_force_field(args.ff_initial)
    ff_f = load_force_field(args.ff_final)
    if ff_i.modes != ff_f.modes:
        raise ConfigError("initial and final force fields have different mode counts")
    data = _load_json(args.duschinsky, "Duschinsky")
    try:
        dusch = DuschinskyData.from_dict(data, ff_i.omega, ff_f.omega)
    except (FranckCondonError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if args.reference_frequency == "auto":
        ref = "auto"
    else:
        try:
            ref = float(args.reference_frequency)
        except ValueError as exc:
            raise ConfigError("--reference-frequency must be 'auto' or a number") from exc
    rows = fc_table(ff_i, ff_f, dusch, args.d, args.n_initial, args.n_final, args.route, ref)
    return csv_text(cfg, ["i_index", "f_index", "fc_factor"], rows)


def cmd_encode_info(args, cfg) -> str:
    modes = vibrational_modes(args.atoms, args.linear)
    counts = [
        {
            "levels": d,
            "direct_qubits": qubit_count(args.atoms, args.linear, d, "direct"),
            "compact_qubits": qubit_count(args.atoms, args.linear, d, "compact"),
        }
        for d in args.d
    ]
    payload = {"atoms": args.atoms, "linear": args.linear, "modes": modes, "qubits": counts}
    if args.ff:
        report = []
        for spec in args.ff:
            ff = load_force_field(spec)
            for row in term_count_report(ff, [d for d in args.d if d >= 2]):
                row["reference_count"] = REFERENCE_TERM_COUNTS.get(ff.label)
                report.append(row)
        payload["term_counts"] = report
    return json_text(cfg, payload)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "vscf": cmd_vscf,
    "vqe": cmd_vqe,
    "dynamics": cmd_dynamics,
    "franck-condon": cmd_franck_condon,
    "encode-info": cmd_encode_info,
}


def _fail(code: int, kind: str, message: str, extra=None) -> int:
    err = {"error": kind, "message": message, "exit_code": code}
    if extra:
        err.update(extra)
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    cfg = resolved_config(args)
    try:
        text = COMMANDS[args.command](args, cfg)
    except VqeDivergence as exc:
        return _fail(EXIT_NUMERICAL, "numerical", str(exc), {"trace": exc.trace})
    except (ConfigError, ForceFieldError, EncodingError, UvccError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (HamiltonianError, FranckCondonError, NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERICAL, "numerical", str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    try:
        with output_stream(args.output) as fh:
            fh.write(text)
    except OSError as exc:
        return _fail(EXIT_CONFIG, "config", f"cannot write output: {exc}")
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
