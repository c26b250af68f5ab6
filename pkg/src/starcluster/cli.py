"""Command-line front end: build-state, gate, swap and report.

Every command reads an optional JSON config, applies flag overrides, and
writes deterministic JSON reports plus CSV data files into ``--out``.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence
(outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from sklearn.exceptions import ConvergenceWarning

from . import __version__
from .channels import FAULT_TOLERANCE_THRESHOLDS, ChiMatrix, chi_bar_rows, error_bound
from .cluster import NoiseModel, get_preset
from .pipeline import run_gate_experiment, run_state_experiment, run_swap_experiment
from .qstate import DensityMatrix, state_from_dict, state_to_dict
from .tomography.records import MeasurementRecord

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3
GATES = ("H", "T", "CNOT")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Run settings; ``noise`` overrides ``preset`` when given.

    ``shots=None`` means exact (infinite-count) outputs with no error bars.
    """

    preset: str = "paper-2013"
    noise: Optional[NoiseModel] = None
    shots: Optional[int] = 600
    seed: int = 0
    samples: int = 100
    out: str = "results"
    gate: str = "CNOT"
    force_outcomes: dict = field(default_factory=dict)
    cost: str = "lsq"
    n_jobs: int = 1

    def __post_init__(self):
        if self.shots is not None and self.shots <= 0:
            raise ConfigError("shots must be positive")
        if self.shots is not None and self.samples < 2:
            raise ConfigError("finite shots need samples >= 2 for error bars")
        if self.samples < 0:
            raise ConfigError("samples must be nonnegative")
        self.gate = str(self.gate).upper()
        if self.gate not in GATES:
            raise ConfigError(f"unknown gate {self.gate!r}; choose from {GATES}")
        if self.cost not in ("lsq", "poisson"):
            raise ConfigError(f"unknown cost {self.cost!r}")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")
        try:
            self.force_outcomes = {int(k): int(v) for k, v in self.force_outcomes.items()}
            self.model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if any(v not in (0, 1) for v in self.force_outcomes.values()):
            raise ConfigError("forced outcomes must be 0 or 1")

    def model(self) -> NoiseModel:
        return self.noise if self.noise is not None else get_preset(self.preset)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["noise"] = self.model().to_dict()
        out["force_outcomes"] = {str(k): v for k, v in sorted(self.force_outcomes.items())}
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        unknown = set(obj) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if obj.get("noise") is not None:
            try:
                obj["noise"] = NoiseModel.from_dict(obj["noise"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad noise model: {exc}") from None
        return cls(**obj)


@dataclass
class Report:
    command: str
    config: ExperimentConfig
    results: dict
    files: list = field(default_factory=list)
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "tool": {"name": "starcluster", "version": __version__},
            "config": self.config.to_dict(),
            "results": self.results,
            "files": sorted(self.files),
            "converged": self.converged,
            "fault_tolerance_thresholds": list(FAULT_TOLERANCE_THRESHOLDS),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _write(out: Path, name: str, text: str, files: list):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    files.append(name)


def _matrix_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _estimate_dict(rho: DensityMatrix) -> dict:
    out = state_to_dict(rho)
    out.update(basis="computational", tp_residual=abs(rho.trace() - 1.0),
               psd_min_eig=rho.min_eigenvalue())
    return out


def _bars_csv(chi: ChiMatrix) -> str:
    buf = io.StringIO()
    cols = ["row", "col", "row_label", "col_label", "real", "imag"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in chi_bar_rows(chi):
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _with_epsilon(fidelity: float, error: Optional[float]) -> dict:
    return {"value": fidelity, "error": error,
            "epsilon_bound": error_bound(min(max(fidelity, 0.0), 1.0))}


def cmd_build_state(cfg: ExperimentConfig) -> Report:
    if cfg.shots is None:
        raise ConfigError("build-state needs finite shots")
    out = Path(cfg.out)
    files: list = []
    exp = run_state_experiment(cfg.model(), cfg.shots, cfg.seed, cfg.samples, cfg.cost,
                               cfg.n_jobs)
    _write(out, "star_counts.csv", exp.record.to_csv(), files)
    _write(out, "star_rho.json", _matrix_json(_estimate_dict(exp.estimate.rho)), files)
    _write(out, "star_truth.json", _matrix_json(_estimate_dict(exp.truth)), files)
    results = exp.to_dict()
    results["fidelity"] = _with_epsilon(exp.fidelity, exp.fidelity_error)
    results["counts_rows"] = int(exp.record.counts.size)
    return Report("build-state", cfg, results, files, bool(exp.estimate.converged))


def _gate(cfg: ExperimentConfig, gate: str, files: list, out: Path):
    exp = run_gate_experiment(gate, cfg.model(), cfg.shots, cfg.seed,
                              cfg.samples if cfg.shots is not None else 0,
                              cfg.force_outcomes or None, n_jobs=cfg.n_jobs)
    tag = gate.lower()
    _write(out, f"chi_{tag}.json", exp.chi.to_json() + "\n", files)
    _write(out, f"chi_{tag}_bars.csv", _bars_csv(exp.chi), files)
    for probe, rec in sorted(exp.records.items()):
        _write(out, f"counts_{tag}_{''.join(probe)}.csv".replace("+", "p"), rec.to_csv(), files)
    results = exp.to_dict()
    results["process_fidelity"] = _with_epsilon(exp.fidelity, exp.fidelity_error)
    return exp, results


def cmd_gate(cfg: ExperimentConfig) -> Report:
    out = Path(cfg.out)
    files: list = []
    exp, results = _gate(cfg, cfg.gate, files, out)
    return Report("gate", cfg, results, files, bool(exp.chi.metadata.get("converged", True)))


def cmd_swap(cfg: ExperimentConfig, chi_file: Optional[str] = None) -> Report:
    out = Path(cfg.out)
    files: list = []
    results: dict = {}
    if chi_file is not None:
        try:
            chi = ChiMatrix.from_json(Path(chi_file).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read chi file {chi_file}: {exc}") from None
        results["source"] = {"chi_file": str(chi_file)}
        converged = True
    else:
        cnot, gate_results = _gate(dataclasses.replace(cfg, gate="CNOT"), "CNOT", files, out)
        chi = cnot.chi
        results["source"] = {"pipeline": gate_results}
        converged = bool(chi.metadata.get("converged", True))
    if chi.n_qubits != 2:
        raise ConfigError("swap needs a two-qubit chi")
    swap = run_swap_experiment(chi)
    _write(out, "chi_swap.json", swap.result.chi.to_json() + "\n", files)
    _write(out, "chi_swap_bars.csv", _bars_csv(swap.result.chi), files)
    results.update(swap.to_dict())
    results["swap_fidelity"] = _with_epsilon(swap.result.fidelity, None)
    return Report("swap", cfg, results, files, converged)


def _check_file(path: Path) -> dict:
    """Re-parse one emitted file and validate its invariants."""
    text = path.read_text()
    if path.suffix == ".csv":
        if path.name.startswith("chi_"):
            rows = list(csv.DictReader(io.StringIO(text)))
            return {"kind": "chi_bars", "rows": len(rows)}
        rec = MeasurementRecord.from_csv(text)
        return {"kind": "counts", "rows": int(rec.counts.size), "complete": rec.is_complete()}
    obj = json.loads(text)
    if "command" in obj:
        return {"kind": "report", "command": obj["command"]}
    if obj.get("basis") == "pauli":
        chi = ChiMatrix.from_dict(obj)
        return {"kind": "chi", "n_qubits": chi.n_qubits, "physical": chi.is_physical(),
                "tp_residual": chi.tp_residual()}
    rho = state_from_dict(obj)
    if not isinstance(rho, DensityMatrix):
        return {"kind": "state", "n_qubits": rho.n_qubits}
    return {"kind": "density", "n_qubits": rho.n_qubits, "physical": rho.is_physical()}


def cmd_report(cfg: ExperimentConfig) -> Report:
    """Validate every file in ``--out`` and collect the fidelities into one summary."""
    out = Path(cfg.out)
    if not out.is_dir():
        raise ConfigError(f"output directory {out} does not exist")
    checks, summary, converged = {}, {}, []
    for path in sorted(out.iterdir()):
        if path.name == "summary.json" or path.suffix not in (".json", ".csv"):
            continue
        try:
            checks[path.name] = _check_file(path)
        except (ValueError, KeyError) as exc:
            checks[path.name] = {"kind": "invalid", "error": str(exc)}
        if checks[path.name]["kind"] == "report":
            emitted = json.loads(path.read_text())
            converged.append(bool(emitted.get("converged", True)))
            res = emitted["results"]
            for key in ("fidelity", "process_fidelity", "swap_fidelity"):
                if key in res:
                    summary[path.stem] = res[key]
    ok = all(c["kind"] != "invalid" and c.get("physical", True) for c in checks.values())
    files: list = []
    report = Report("report", cfg, {"files": checks, "fidelities": summary, "valid": ok},
                    files, all(converged))
    _write(out, "summary.json", report.to_json(), files)
    if not ok:
        bad = sorted(k for k, c in checks.items() if c["kind"] == "invalid" or not c.get("physical", True))
        raise ConfigError(f"invalid files in {out}: {bad}")
    return report


def _parse_force(text: str) -> dict:
    # "1=1,2=0" -> {1: 1, 2: 0}
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        q, sep, v = part.partition("=")
        if not sep:
            raise ConfigError(f"bad --force-outcomes entry {part!r}; use qubit=outcome")
        try:
            out[int(q)] = int(v)
        except ValueError:
            raise ConfigError(f"bad --force-outcomes entry {part!r}") from None
    return out


def _parse_shots(text: str):
    if text.lower() in ("exact", "inf"):
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be an integer or 'exact', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starcluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"starcluster {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--preset", help="noise preset: ideal or paper-2013")
    common.add_argument("--shots", type=_parse_shots, default=argparse.SUPPRESS, help="counts per setting, or 'exact'")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int, help="Monte Carlo resamples")
    common.add_argument("--out", help="output directory")
    common.add_argument("--gate", help="H, T or CNOT")
    common.add_argument("--force-outcomes", help="forced branch, e.g. '1=1,2=0'")
    common.add_argument("--cost", help="state MLE cost: lsq or poisson")
    common.add_argument("--n-jobs", type=int, help="threads for Monte Carlo resampling")
    sub.add_parser("build-state", parents=[common], help="star-state tomography")
    sub.add_parser("gate", parents=[common], help="process tomography of one gate")
    swap = sub.add_parser("swap", parents=[common], help="compose three CNOTs into SWAP")
    swap.add_argument("--chi", help="two-qubit chi JSON; default runs the CNOT pipeline")
    sub.add_parser("report", parents=[common], help="validate and summarize an output directory")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    obj: dict = {}
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
    if args.preset is not None:
        obj["preset"] = args.preset
        obj.pop("noise", None)
    for key in ("seed", "samples", "out", "gate", "cost", "n_jobs"):
        value = getattr(args, key)
        if value is not None:
            obj[key] = value
    if "shots" in vars(args):
        obj["shots"] = args.shots
    if args.force_outcomes is not None:
        obj["force_outcomes"] = _parse_force(args.force_outcomes)
    try:
        return ExperimentConfig.from_dict(obj)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            if args.command == "build-state":
                report = cmd_build_state(cfg)
            elif args.command == "gate":
                report = cmd_gate(cfg)
            elif args.command == "swap":
                report = cmd_swap(cfg, args.chi)
            else:
                report = cmd_report(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    nonconverged = [w for w in caught if issubclass(w.category, ConvergenceWarning)]
    if nonconverged:
        report.converged = False
        report.results["warnings"] = sorted({str(w.message) for w in nonconverged})
    if args.command != "report":
        name = f"{args.command.replace('-', '_')}_report.json"
        if args.command == "gate":
            name = f"gate_{cfg.gate.lower()}_report.json"
        report.files.append(name)
        _write(Path(cfg.out), name, report.to_json(), [])
    print(report.to_json(), end="")
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
