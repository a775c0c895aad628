"""Command-line front end: run / sweep / converge.

Config files are flat ``key = value`` text with keys exactly matching the
SimConfig field names; '#' starts a comment.  All rates and frequencies are
in units of omega and times in units of 1/omega, so configs read like
dimensionless parameter sets (omega = 1, omega0 = 1.01, kappa = 20, ...).
A run manifest (JSON, written next to the CSV) echoes every resolved
parameter and is itself accepted as a config input, so a manifest can be
fed back to reproduce its run byte for byte.

Exit codes: 0 success, 1 invalid config, 2 dynamics invariant violation,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

from . import __version__, pipeline, plots
from .dynamics import ConfigError, DynamicsError, SimConfig

log = logging.getLogger(__name__)

CSV_HEADER = "t,discord,concurrence,mutual_info,classical_corr,n_total,n_atoms,trace_dev,min_eig"

_FIELD_PARSERS = {
    "omega": float,
    "omega0": float,
    "g": float,
    "kappa": float,
    "rwa": None,       # parsed by _parse_bool
    "n_max": int,
    "t_max": float,
    "sample_interval": float,
    "integrator_rel_tol": float,
    "integrator_abs_tol": float,
    "initial_state": str,
}
_SWEEP_KEYS = ("axis", "values", "label")


def bundled_config_path(name: str) -> Path:
    """Path of a packaged reference config (fig1a, fig1b, fig2, fig3a, fig3b)."""
    return Path(resources.files(__package__) / "configs" / f"{name}.cfg")


def _parse_bool(raw: str, field: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(field, f"field '{field}' expects a boolean, got {raw!r}")


def _parse_kv_lines(text: str, source: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("config", f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(key, f"{source}:{lineno}: duplicate key '{key}'")
        entries[key] = raw.strip()
    return entries


def _config_from_entries(entries: dict[str, str], source: str) -> SimConfig:
    kwargs = {}
    for key, raw in entries.items():
        if key not in _FIELD_PARSERS:
            raise ConfigError(key, f"{source}: unknown config key '{key}'")
        if key == "rwa":
            kwargs[key] = _parse_bool(raw, key)
            continue
        parser = _FIELD_PARSERS[key]
        try:
            kwargs[key] = parser(raw)
        except ValueError:
            raise ConfigError(key, f"{source}: field '{key}' has invalid value {raw!r}") from None
    return SimConfig(**kwargs).validate()


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read config file {path}: {exc}") from exc


def load_run_config(path) -> SimConfig:
    """Load a key=value config file or a previously written run manifest."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        try:
            payload = json.loads(text)
            entries = {k: str(v) for k, v in payload["config"].items()}
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError("config", f"{path}: not a valid manifest: {exc}") from exc
        return _config_from_entries(entries, str(path))
    return _config_from_entries(_parse_kv_lines(text, str(path)), str(path))


def load_sweep_spec(path) -> pipeline.SweepSpec:
    """Load a sweep spec: axis/values/label plus base-config overrides."""
    entries = _parse_kv_lines(_read_text(path), str(path))
    for key in _SWEEP_KEYS:
        if key not in entries:
            raise ConfigError(key, f"{path}: sweep spec is missing '{key}'")
    axis = entries.pop("axis").strip()
    label = entries.pop("label").strip()
    raw_values = entries.pop("values")
    try:
        values = [float(v) for v in raw_values.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError("values", f"{path}: 'values' has a non-numeric entry: {raw_values!r}") from None
    base = _config_from_entries(entries, str(path))
    return pipeline.SweepSpec(base=base, axis=axis, values=values, label=label).validate()


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_records_csv(path, records) -> None:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join(_fmt(v) for v in (
            r.t, r.discord, r.concurrence, r.mutual_info, r.classical_corr,
            r.n_total, r.n_atoms, r.trace_dev, r.min_eig)))
    Path(path).write_text("\n".join(lines) + "\n")


def _record_dict(record) -> dict:
    return {k: float(v) for k, v in asdict(record).items()}


def _write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _run_manifest(result: pipeline.RunResult, command: str, outputs: list[str]) -> dict:
    return {
        "tool": "rabiqd",
        "version": __version__,
        "command": command,
        "config": result.config.as_dict(),
        "wall_time_s": result.wall_time,
        "sample_count": len(result.records),
        "terminal_record": _record_dict(result.records[-1]),
        "steady_state_reached": result.steady_reached,
        "max_x_residual": result.max_x_residual,
        "outputs": outputs,
    }


def cmd_run(config_path, output_path, render_plots: bool = True) -> int:
    config = load_run_config(config_path)
    log.info("run: %s", config)
    result = pipeline.run(config)
    output_path = Path(output_path)
    write_records_csv(output_path, result.records)
    outputs = [str(output_path)]
    if render_plots:
        png = output_path.with_suffix(".png")
        plots.plot_run(result.records, png)
        outputs.append(str(png))
    manifest_path = Path(str(output_path) + ".manifest.json")
    _write_manifest(manifest_path, _run_manifest(result, "run", outputs))
    last = result.records[-1]
    log.info("finished: %d samples, terminal discord %.6g, concurrence %.6g, steady=%s",
             len(result.records), last.discord, last.concurrence, result.steady_reached)
    return 0


def sweep_csv_name(label: str, axis: str, value: float) -> str:
    return f"{label}_{axis}={value:g}.csv"


def cmd_sweep(spec_path, output_dir, threads: int = 1, render_plots: bool = True) -> int:
    spec = load_sweep_spec(spec_path)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("sweep %r over %s: %s", spec.label, spec.axis, spec.values)
    results = pipeline.run_sweep(spec, workers=threads)

    outputs = []
    summary_lines = [f"{spec.axis},{CSV_HEADER}"]
    for value, result in results.items():
        csv_path = out_dir / sweep_csv_name(spec.label, spec.axis, value)
        write_records_csv(csv_path, result.records)
        outputs.append(str(csv_path))
        last = result.records[-1]
        summary_lines.append(",".join([_fmt(value)] + [_fmt(v) for v in (
            last.t, last.discord, last.concurrence, last.mutual_info,
            last.classical_corr, last.n_total, last.n_atoms,
            last.trace_dev, last.min_eig)]))
    summary_path = out_dir / f"{spec.label}_summary.csv"
    summary_path.write_text("\n".join(summary_lines) + "\n")
    outputs.append(str(summary_path))

    if render_plots:
        png = out_dir / f"{spec.label}.png"
        plots.plot_sweep(results, spec.axis, spec.label, png)
        outputs.append(str(png))

    manifest = {
        "tool": "rabiqd",
        "version": __version__,
        "command": "sweep",
        "label": spec.label,
        "axis": spec.axis,
        "values": [float(v) for v in spec.values],
        "base_config": spec.base.as_dict(),
        "runs": {
            _fmt(value): _run_manifest(result, "sweep", [])
            for value, result in results.items()
        },
        "outputs": outputs,
    }
    _write_manifest(out_dir / f"{spec.label}_manifest.json", manifest)
    return 0


def parse_n_list(raw: str) -> list[int]:
    """Parse '5:55:5' (inclusive range) or '5,10,20' into an n_max ladder."""
    raw = raw.strip()
    try:
        if ":" in raw:
            parts = [int(p) for p in raw.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError
            if step <= 0:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(p) for p in raw.split(",") if p.strip() != ""]
    except ValueError:
        raise ConfigError("n", f"cannot parse n list {raw!r}; use start:stop:step or a comma list") from None
    if len(values) < 2:
        raise ConfigError("n", f"need at least two n_max values to difference, got {values}")
    return values


def cmd_converge(config_path, n_raw, output_path, render_plots: bool = True) -> int:
    config = load_run_config(config_path)
    n_values = parse_n_list(n_raw)
    log.info("convergence study over n_max=%s", n_values)
    report = pipeline.convergence_study(config, n_values)

    lines = ["n,max_delta,converged"]
    for n, delta in zip(report.n_values, report.max_deltas):
        lines.append(f"{n},{_fmt(delta)},{str(delta < pipeline.CONVERGENCE_TOL).lower()}")
    output_path = Path(output_path)
    output_path.write_text("\n".join(lines) + "\n")

    outputs = [str(output_path)]
    if render_plots:
        png = output_path.with_suffix(".png")
        plots.plot_convergence(report, png)
        outputs.append(str(png))
    manifest = {
        "tool": "rabiqd",
        "version": __version__,
        "command": "converge",
        "config": config.as_dict(),
        "n_values": report.n_values,
        "max_deltas": report.max_deltas,
        "max_deltas_embedded": report.max_deltas_embedded,
        "converged_at": report.converged_at,
        "outputs": outputs,
    }
    _write_manifest(Path(str(output_path) + ".manifest.json"), manifest)
    log.info("converged_at = %s", report.converged_at)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabiqd",
        description="Two atoms in a lossy cavity: correlation dynamics from the vacuum state.")
    parser.add_argument("--version", action="version", version=f"rabiqd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress progress logging")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep entries (default 1, deterministic)")
    common.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    p_run = sub.add_parser("run", parents=[common], help="evolve one configuration")
    p_run.add_argument("config", help="key=value config file (or a run manifest)")
    p_run.add_argument("-o", "--output", required=True, help="output CSV path")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a one-axis parameter sweep")
    p_sweep.add_argument("spec", help="sweep spec file (axis/values/label + base config)")
    p_sweep.add_argument("-o", "--output", required=True, help="output directory")

    p_conv = sub.add_parser("converge", parents=[common],
                            help="Fock-truncation convergence study")
    p_conv.add_argument("config", help="key=value config file")
    p_conv.add_argument("--n", required=True,
                        help="n_max ladder, e.g. 5:55:5 or 10,20,40")
    p_conv.add_argument("-o", "--output", required=True, help="output CSV path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.output, render_plots=not args.no_plot)
        if args.command == "sweep":
            return cmd_sweep(args.spec, args.output, threads=args.threads,
                             render_plots=not args.no_plot)
        if args.command == "converge":
            return cmd_converge(args.config, args.n, args.output,
                                render_plots=not args.no_plot)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"rabiqd: invalid config: {exc}", file=sys.stderr)
        return 1
    except DynamicsError as exc:
        print(f"rabiqd: dynamics failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rabiqd: I/O failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
