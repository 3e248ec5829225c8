"""Command-line front end.

Commands
--------
fit       estimate theta from a single-column CSV file
simulate  draw seeded variates into a CSV file
density   evaluate the standardized density on a grid
validate  run the self-check suites

Results are written as JSON (``fit``, ``validate``) or CSV (``simulate``,
``density``) with numbers in 17 significant digits.  Every output carries a
manifest with the command, the resolved configuration, the seed, the library
version and the SHA-256 digest of the input; CSV outputs get it as a
``<output>.manifest.json`` sidecar.  Wall-clock timings go to
``<output>.timing.json`` so that the manifest itself is reproducible byte for
byte.

Exit codes: 0 success, 1 input or validation error, 2 restart limit reached,
3 optimizer failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import validate as validation
from .core import ALPHA_GAP, ParameterError, Regime, RegionConfig, StableParams
from .density import (
    Adaptive,
    OracleError,
    TruncationError,
    central_order,
    central_series,
    density,
    oracle_density,
    tail_order,
    tail_series,
)
from .gmm import FitConfig, FitResult, OptimizerFailed, SampleMode, Status, fit, select_regime
from .moments import MomentConfig
from .optimizer import OptimizerSettings
from .sampler import SamplerSpec, sample

__all__ = ["CliError", "main", "read_column", "resolve_fit_config"]

log = logging.getLogger("stablegmm")

EXIT_OK, EXIT_INPUT, EXIT_RESTART_LIMIT, EXIT_OPTIMIZER_FAILED = 0, 1, 2, 3
_STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.RESTART_LIMIT: EXIT_RESTART_LIMIT,
    Status.OPTIMIZER_FAILED: EXIT_OPTIMIZER_FAILED,
}

FIT_DEFAULTS: dict[str, Any] = {
    "regime": "auto",
    "m": 6,
    "weights": None,
    "r1": None,
    "r2": None,
    "init": None,
    "max_restarts": 5,
    "restart_margin": 0.05,
    "widen_factor": 1.5,
    "sample_mode": "candidate",
    "x_tolerance": 1e-7,
    "f_tolerance": 1e-10,
    "max_evaluations": 3000,
    "seed": 0,
}


class CliError(Exception):
    """A user-facing error that maps to exit code 1."""


# -- serialisation ------------------------------------------------------------


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = f"{x:.17g}"
    # keep integral floats recognisable as reals
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written in 17 significant digits."""
    pad, inner = " " * indent * _level, " " * indent * (_level + 1)
    if obj is None or isinstance(obj, (bool, str, int)):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return _number(float(obj))
    if isinstance(obj, np.integer):
        return str(int(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from exc


def _write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_number(float(v)) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _manifest(command: str, config: dict, seed: int | None, digest: str | None) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "input_sha256": digest,
    }


def _write_timing(output: Path, command: str, seconds: float) -> None:
    _write_text(output.with_name(output.name + ".timing.json"), dumps({"command": command, "seconds": seconds}) + "\n")


# -- input --------------------------------------------------------------------


def read_column(path: Path) -> tuple[np.ndarray, str]:
    """Values of a single-column CSV file and the SHA-256 of its bytes.

    A non-numeric first row is taken as a header.  Blank lines are skipped.
    Raises :class:`CliError` naming the line of the first bad row.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not UTF-8 text") from exc
    values = []
    for line_no, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 1:
            raise CliError(f"{path}, line {line_no}: expected one column, found {len(row)}")
        cell = row[0].strip()
        try:
            value = float(cell)
        except ValueError:
            if line_no == 1:
                continue
            raise CliError(f"{path}, line {line_no}: cannot parse {cell!r} as a number") from None
        if not math.isfinite(value):
            raise CliError(f"{path}, line {line_no}: non-finite value {cell!r}")
        values.append(value)
    if not values:
        raise CliError(f"{path}: empty input")
    return np.array(values), digest


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        loaded = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(loaded, dict):
        raise CliError(f"{path}: expected a JSON object")
    # a previous result or manifest can serve as the config of a re-run
    if "manifest" in loaded:
        loaded = loaded["manifest"]
    if "config" in loaded and "command" in loaded:
        loaded = loaded["config"]
    return loaded


def resolve_fit_config(config_file: dict, flags: dict) -> dict:
    """Merge built-in defaults, the config file and explicit flags, in that order."""
    unknown = set(config_file) - set(FIT_DEFAULTS)
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = dict(FIT_DEFAULTS)
    resolved.update(config_file)
    resolved.update({k: v for k, v in flags.items() if v is not None})
    if (resolved["r1"] is None) != (resolved["r2"] is None):
        raise CliError("r1 and r2 must be given together")
    if resolved["regime"] not in ("auto", "upper", "lower"):
        raise CliError(f"regime must be auto, upper or lower, got {resolved['regime']!r}")
    return resolved


def _fit_config(resolved: dict) -> FitConfig:
    region = None if resolved["r1"] is None else RegionConfig(resolved["r1"], resolved["r2"])
    weights = resolved["weights"]
    return FitConfig(
        moment_config=MomentConfig(
            m=resolved["m"], weights=None if weights is None else tuple(weights), truncation=Adaptive()
        ),
        region=region,
        regime=None if resolved["regime"] == "auto" else Regime(resolved["regime"]),
        max_restarts=resolved["max_restarts"],
        restart_margin=resolved["restart_margin"],
        widen_factor=resolved["widen_factor"],
        sample_mode=SampleMode(resolved["sample_mode"]),
        optimizer=OptimizerSettings(
            x_tolerance=resolved["x_tolerance"],
            f_tolerance=resolved["f_tolerance"],
            max_evaluations=resolved["max_evaluations"],
            simplex_init_scale=(0.1, 0.2, 0.1, 0.1),
        ),
    )


def _params(args) -> StableParams:
    try:
        return StableParams(args.alpha, args.beta, args.tau, args.ctilde)
    except ParameterError as exc:
        if exc.field == "alpha" and abs(args.alpha - 1.0) <= ALPHA_GAP:
            raise CliError("alpha=1 unsupported") from None
        raise CliError(f"invalid {exc}") from None


def _theta_dict(p: StableParams) -> dict:
    return {"alpha": p.alpha, "beta": p.beta, "tau": p.tau, "c_tilde": p.c_tilde}


def _fit_dict(result: FitResult) -> dict:
    return {
        "theta_hat": _theta_dict(result.theta_hat),
        "objective": result.objective,
        "status": result.status.value,
        "regime": result.regime_chosen.value,
        "region": {"r1": result.region.r1, "r2": result.region.r2},
        "evaluations": result.evaluations,
        "restarts": [
            {
                "region": {"r1": r.region.r1, "r2": r.region.r2},
                "start": _theta_dict(r.start),
                "end": _theta_dict(r.end),
                "objective": r.objective,
            }
            for r in result.restarts
        ],
    }


# -- commands -----------------------------------------------------------------


def cmd_fit(args) -> int:
    data, digest = read_column(args.input)
    flags = {
        "regime": args.regime,
        "m": args.m,
        "r1": args.r1,
        "r2": args.r2,
        "seed": args.seed,
    }
    resolved = resolve_fit_config(_load_config(args.config), flags)
    try:
        cfg = _fit_config(resolved)
        init = None if resolved["init"] is None else StableParams(*resolved["init"])
    except (ParameterError, ValueError, TypeError) as exc:
        raise CliError(f"invalid configuration: {exc}") from None

    if cfg.regime is None and init is None:
        try:
            regime, fits = select_regime(data, cfg)
        except OptimizerFailed as exc:
            log.error("%s", exc)
            return EXIT_OPTIMIZER_FAILED
        result = fits[regime]
        candidates = {r.value: {"objective": f.objective, "status": f.status.value} for r, f in fits.items()}
    else:
        if cfg.regime is None:
            cfg = replace(cfg, regime=init.regime)
        try:
            result = fit(data, init, cfg)
        except ParameterError as exc:
            raise CliError(f"invalid configuration: {exc}") from None
        candidates = None

    document = _fit_dict(result)
    if candidates is not None:
        document["candidates"] = candidates
    document["manifest"] = _manifest("fit", resolved, resolved["seed"], digest)
    _write_text(args.output, dumps(document) + "\n")
    return _STATUS_EXIT[result.status]


def cmd_simulate(args) -> int:
    params = _params(args)
    try:
        spec = SamplerSpec(params, args.n, args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    draws = sample(spec)
    _write_csv(args.output, ["x"], [draws])
    config = {"alpha": params.alpha, "beta": params.beta, "tau": params.tau, "c_tilde": params.c_tilde, "n": spec.n}
    manifest = _manifest("simulate", config, spec.seed, None)
    _write_text(args.output.with_name(args.output.name + ".manifest.json"), dumps(manifest) + "\n")
    return EXIT_OK


def parse_grid(text: str) -> np.ndarray:
    """Grid ``MIN:MAX:STEP`` including both ends when STEP divides the span."""
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise CliError(f"grid must look like MIN:MAX:STEP, got {text!r}") from None
    if not all(math.isfinite(v) for v in (lo, hi, step)) or step <= 0.0 or hi < lo:
        raise CliError(f"grid needs finite MIN <= MAX and STEP > 0, got {text!r}")
    count = int(math.floor((hi - lo) / step * (1.0 + 1e-12))) + 1
    if count > 10**6:
        raise CliError(f"grid has {count} points; the limit is 1000000")
    return lo + step * np.arange(count)


def cmd_density(args) -> int:
    params = _params(args)
    grid = parse_grid(args.grid)
    region = None
    if (args.r1 is None) != (args.r2 is None):
        raise CliError("r1 and r2 must be given together")
    if args.r1 is not None:
        try:
            region = RegionConfig(args.r1, args.r2)
            region.ratios(params)
        except ParameterError as exc:
            raise CliError(f"invalid region: {exc}") from None
    if args.zone == "tail" and grid[0] <= 0.0 <= grid[-1]:
        raise CliError(f"grid {args.grid} reaches u=0, where the tail series is singular")

    policy = Adaptive()

    def series_value(u: float) -> float:
        if args.zone == "tail":
            return tail_series(u, params, tail_order(abs(u), params, policy))
        if args.zone == "central":
            return central_series(u, params, central_order(abs(u), params, policy))
        return density(u, params, region, policy).value

    columns, header = [grid], ["u"]
    try:
        if args.mode in ("series", "both"):
            columns.append(np.array([series_value(float(u)) for u in grid]))
            header.append("value")
        if args.mode in ("oracle", "both"):
            oracle = np.array([oracle_density(float(u), params) for u in grid])
            if args.mode == "oracle":
                header.append("value")
            else:
                header.append("oracle")
            columns.append(oracle)
        if args.mode == "both":
            columns.append(np.abs(columns[1] - columns[2]))
            header.append("abs_err")
    except (TruncationError, OracleError) as exc:
        raise CliError(str(exc)) from None
    _write_csv(args.output, header, columns)
    config = {
        **_theta_dict(params),
        "grid": args.grid,
        "mode": args.mode,
        "zone": args.zone,
        "r1": args.r1,
        "r2": args.r2,
    }
    manifest = _manifest("density", config, None, None)
    _write_text(args.output.with_name(args.output.name + ".manifest.json"), dumps(manifest) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validation.run(args.scope)
    print(report.table())
    if args.output is not None:
        document = report.to_dict()
        document["manifest"] = _manifest("validate", {"scope": args.scope}, None, None)
        _write_text(args.output, dumps(document) + "\n")
    return EXIT_OK if report.passed else EXIT_INPUT


# -- parser -------------------------------------------------------------------


def _add_theta(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--ctilde", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablegmm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate theta from a data file")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--config", type=Path, help="JSON config, or a previous result to re-run")
    p.add_argument("--regime", choices=("upper", "lower", "auto"))
    p.add_argument("--m", type=int, help="number of moment functions (>= 5)")
    p.add_argument("--r1", type=float, help="initial right cut in data units")
    p.add_argument("--r2", type=float, help="initial left cut in data units")
    p.add_argument("--seed", type=int, help="recorded in the manifest")
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("simulate", help="draw seeded variates")
    _add_theta(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("density", help="evaluate the standardized density on a grid")
    _add_theta(p)
    p.add_argument("--grid", required=True, help="MIN:MAX:STEP in standardized units")
    p.add_argument("--mode", choices=("series", "oracle", "both"), default="series")
    p.add_argument("--zone", choices=("auto", "central", "tail"), default="auto")
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("validate", help="run the self-check suites")
    p.add_argument("--scope", choices=(*validation.SCOPES, "all"), default="all")
    p.add_argument("--output", type=Path, help="write the JSON report here")
    p.set_defaults(handler=cmd_validate)
    return parser


def _attach_grid(argv: Sequence[str]) -> list[str]:
    # "--grid -8:8:0.1" would otherwise be read as an unknown option
    out = list(argv)
    for i in range(len(out) - 1):
        if out[i] == "--grid" and out[i + 1].startswith("-"):
            out[i : i + 2] = [f"--grid={out[i + 1]}"]
            break
    return out


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(_attach_grid(sys.argv[1:] if argv is None else argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="stablegmm: %(message)s")
    start = time.perf_counter()
    try:
        code = args.handler(args)
    except CliError as exc:
        log.error("error: %s", exc)
        return EXIT_INPUT
    output = getattr(args, "output", None)
    if output is not None and output.exists():
        _write_timing(output, args.command, time.perf_counter() - start)
    log.info("%s finished with exit code %d", args.command, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
