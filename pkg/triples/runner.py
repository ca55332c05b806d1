"""
Reusable command runner.

Provides :func:`run`, the programmatic entry point behind every subcommand of
``triple_lab.py``. It resolves configuration, loads the input specs, evaluates
the requested quantities on a grid (concurrently when ``workers`` > 1, results
kept in grid order) and writes a JSON report or CSV grid atomically.

Exit codes: 0 success, 2 a verification residual above tolerance, 1 an input,
validation or numerical error.

This module is decoupled from argparse so tests and notebooks can build a
:class:`RunConfig` and call :func:`run` directly.
"""

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

from triples import __version__
from triples.charfn import char_S, livsic_s, normalized_S_hat
from triples.config import get_grid, get_oracle_settings, get_seed, get_tolerance, get_workers
from triples.errors import NumericalError, SpecFormatError, TripleLabError
from triples.grid import GridSpec
from triples.herglotz import CachePolicy, measure_evaluator, weyl_m
from triples.homogeneous import (
    HomogeneousModel,
    cayley_relation_check,
    closed_form_M,
    extension_type,
    mn_inversion_check,
    quadrature_agreement,
    verify_inverse_duality,
)
from triples.log import logger, report_residual, warnings_to_log
from triples.measure import CoreSpectrum, classify_point
from triples.mobius import MobiusMap, is_infinite, preimage_infinity
from triples.oracle import (
    check_anchor_independence,
    check_inverse_characteristic,
    check_rank_one_inverse,
    check_resolvent_identity,
    discretize,
    random_model,
)
from triples.spec_io import load_measure, load_triple
from triples.transform import BoundedCase, transform_triple, verify_invariance


COMMANDS = (
    "weyl",
    "charfn",
    "classify",
    "transform",
    "verify-invariance",
    "homogeneous",
    "oracle",
    "extension-type",
)
FORMATS = ("json", "csv")
CSV_COLUMNS = ("quantity", "re_z", "im_z", "re_val", "im_val", "abs_val")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RESIDUAL = 2

# Resolvent-identity and anchor pairs for the oracle command; i itself is a
# resonance of p when κ = 0
ORACLE_POINTS = (2j, 3j)
ORACLE_SEEDS = 10
DEFAULT_CLASSIFY_POINTS = (0.0, 0.5, 1.0, 10.0, -0.1, -1.0, -10.0)
DEFAULT_EXTENSION_NUS = (-0.5, 0.0, 0.5)


@dataclass
class RunConfig:
    command: str
    triple: Optional[str] = None
    measure: Optional[str] = None
    map: Optional[str] = None
    points: tuple = ()
    real_points: tuple = ()
    nu: tuple = ()
    side: str = "positive"
    kappa: complex = 0j
    grid: Optional[GridSpec] = None
    tolerance: Optional[float] = None
    format: str = "json"
    output: Optional[str] = None
    seed: Optional[int] = None
    workers: Optional[int] = None
    n: Optional[int] = None
    quantile_cut: Optional[float] = None
    inverse_chain: bool = False
    root: str = "."
    timestamp: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SpecFormatError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise SpecFormatError(f"unknown output format {self.format!r}")
        if self.tolerance is not None and not self.tolerance > 0:
            raise SpecFormatError(f"tolerance must be positive, got {self.tolerance}")

    def echo(self):
        data = asdict(self)
        data["kappa"] = [self.kappa.real, self.kappa.imag]
        data["points"] = [[z.real, z.imag] for z in self.points]
        data["grid"] = asdict(self.grid) if self.grid is not None else None
        data.pop("timestamp")
        return data


@dataclass
class RunResult:
    exit_code: int
    report: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Grid evaluation
# ---------------------------------------------------------------------------

def _resolve_points(config):
    if config.points:
        return tuple(complex(z) for z in config.points)
    spec = config.grid or GridSpec.from_mapping(get_grid(config.root))
    return spec.points()


def evaluate_grid(quantities, points, workers=1):
    """
    Evaluate named functions at every point; failures become NaN cells.

    ``quantities`` maps a quantity name to a callable of z. Returns (rows,
    failures) in quantity-major, grid order regardless of completion order.
    """
    def cell(task):
        name, fn, z = task
        try:
            return name, z, complex(fn(z)), None
        except (NumericalError, ValueError, ZeroDivisionError) as e:
            return name, z, complex(math.nan, math.nan), str(e)

    tasks = [(name, fn, z) for name, fn in quantities.items() for z in points]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, tasks))
    else:
        results = [cell(t) for t in tasks]

    rows, failures = [], []
    for name, z, value, error in results:
        rows.append({
            "quantity": name,
            "re_z": z.real,
            "im_z": z.imag,
            "re_val": value.real,
            "im_val": value.imag,
            "abs_val": abs(value),
        })
        if error is not None:
            failures.append({"quantity": name, "re_z": z.real, "im_z": z.imag, "error": error})
    if failures:
        logger.warning("[yellow]%d grid cell(s) failed[/yellow]; recorded as NaN", len(failures))
    return rows, failures


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _require(value, flag, command):
    if value is None:
        raise SpecFormatError(f"{command} needs {flag}")
    return value


def _load_model(config):
    if config.triple:
        return load_triple(config.triple)
    _require(config.measure, "--triple or --measure", config.command)
    return load_measure(config.measure)


def _cmd_weyl(config, points, workers, tol):
    model = _load_model(config)
    evaluator = model.weyl if hasattr(model, "weyl") else measure_evaluator(model, CachePolicy.MEMO)
    rows, failures = evaluate_grid({"M": lambda z: weyl_m(evaluator, z)}, points, workers)
    return {"points": len(points)}, {}, True, rows, failures


def _cmd_charfn(config, points, workers, tol):
    t = load_triple(_require(config.triple, "--triple", config.command))
    c = t.char
    quantities = {
        "M": lambda z: weyl_m(t.weyl, z),
        "s": lambda z: livsic_s(t.weyl, z),
        "S": lambda z: char_S(c, z),
        "S_hat": lambda z: normalized_S_hat(c, z),
    }
    rows, failures = evaluate_grid(quantities, points, workers)
    kappa = t.kappa.kappa
    return {"kappa": [kappa.real, kappa.imag]}, {}, True, rows, failures


def _cmd_classify(config, points, workers, tol):
    model = _load_model(config)
    m = model.measure if hasattr(model, "measure") else model
    table = []
    for s in config.real_points or DEFAULT_CLASSIFY_POINTS:
        point = classify_point(m, float(s))
        table.append({
            "s": float(s),
            "class": "core" if isinstance(point, CoreSpectrum) else "quasi-regular",
            "has_atom": bool(getattr(point, "has_atom", False)),
        })
    return {"classification": table}, {}, True, [], []


def _cmd_transform(config, points, workers, tol):
    t = load_triple(_require(config.triple, "--triple", config.command))
    f = MobiusMap.parse(_require(config.map, "--map", config.command))
    image = transform_triple(t, f)
    omega = preimage_infinity(f)
    if isinstance(image, BoundedCase):
        phase = image.boundary_phase
        results = {"branch": "ii", "omega": image.omega, "boundary_phase": [phase.real, phase.imag]}
        return results, {}, True, [], []
    c = image.char
    rows, failures = evaluate_grid(
        {"M": lambda z: weyl_m(image.weyl, z), "S_hat": lambda z: normalized_S_hat(c, z)}, points, workers
    )
    kappa = image.kappa.kappa
    results = {
        "branch": "i",
        "omega": None if is_infinite(omega) else omega,
        "kappa": [kappa.real, kappa.imag],
        "provenance": [step.as_text() for step in image.provenance],
    }
    return results, {}, True, rows, failures


def _cmd_verify_invariance(config, points, workers, tol):
    t = load_triple(_require(config.triple, "--triple", config.command))
    f = MobiusMap.parse(_require(config.map, "--map", config.command))
    settings = get_oracle_settings(config.root)
    report = verify_invariance(
        t,
        f,
        points,
        n=config.n or settings["n"],
        quantile_cut=config.quantile_cut or settings["quantile_cut"],
        workers=workers,
    )
    limit = tol("invariance" if report.branch == "i" else "bounded")
    residuals = {"invariance": report.residual}
    if report.discrete_residual is not None:
        residuals["discrete"] = report.discrete_residual
    if report.closed_form_residual is not None:
        residuals["closed_form"] = report.closed_form_residual
    passed = report_residual(f"Branch ({report.branch})", report.residual, limit)
    return report.as_dict(), residuals, passed, [], []


def _cmd_homogeneous(config, points, workers, tol):
    nus = config.nu or (0.5,)
    h = HomogeneousModel(nus[0], config.side)
    t = h.triple(config.kappa)
    c = t.char
    quantities = {
        "M": lambda z: closed_form_M(h, z),
        "s": lambda z: livsic_s(t.weyl, z),
        "S": lambda z: char_S(c, z),
    }
    rows, failures = evaluate_grid(quantities, points, workers)
    residuals = {
        "mn_inversion": mn_inversion_check(h.nu, points),
        "quadrature": quadrature_agreement(h, points),
    }
    if h.side == "positive":
        residuals["cayley"] = cayley_relation_check(h.nu, points)
    limits = {"mn_inversion": tol("identity"), "cayley": tol("identity"), "quadrature": tol("invariance")}
    checks = [report_residual(name, value, limits[name]) for name, value in residuals.items()]
    passed = all(checks)
    results = {"nu": h.nu, "side": h.side, "normalization_constant": h.normalization_constant}
    return results, residuals, passed, rows, failures


def _cmd_extension_type(config, points, workers, tol):
    table = []
    for nu in config.nu or DEFAULT_EXTENSION_NUS:
        kind = extension_type(HomogeneousModel(nu))
        table.append({"nu": float(nu), "friedrichs": kind.friedrichs, "krein": kind.krein})
    results = {"extension_types": table}
    residuals = {}
    passed = True
    if config.inverse_chain:
        nus = [nu for nu in config.nu if nu >= 0] or [0.0, 0.25, 0.5]
        reports = [verify_inverse_duality(nu, points, tol("identity")) for nu in nus]
        results["inverse_chain"] = [r.as_dict() for r in reports]
        residuals["mn_inversion"] = max(r.mn_residual for r in reports)
        residuals["pullback"] = max(r.pullback_residual for r in reports)
        passed = all(r.passed for r in reports)
    return results, residuals, passed, [], []


def _cmd_oracle(config, points, workers, tol):
    settings = get_oracle_settings(config.root)
    n = config.n or settings["random_n"]
    z1, z2 = ORACLE_POINTS
    if config.triple:
        models = [discretize(load_triple(config.triple), n, config.quantile_cut or settings["quantile_cut"])]
    else:
        seed = get_seed(config.root, config.seed)
        models = [random_model(n, seed + k) for k in range(ORACLE_SEEDS)]

    resolvent = max(check_resolvent_identity(d, z1, z2) for d in models)
    anchor = max(check_anchor_independence(d, z1, z2) for d in models)
    residuals = {"resolvent_identity": resolvent, "anchor_independence": anchor}
    passed = report_residual("Resolvent identity", resolvent, tol("oracle"))
    passed = report_residual("Anchor independence", anchor, tol("oracle")) and passed
    if all(not (d.nodes == 0).any() for d in models):
        residuals["rank_one_inverse"] = max(check_rank_one_inverse(d) for d in models)
        residuals["inverse_characteristic"] = max(check_inverse_characteristic(d, points) for d in models)
        passed = report_residual("Rank-one inverse", residuals["rank_one_inverse"], tol("rank_one")) and passed
        passed = report_residual(
            "Inverse characteristic", residuals["inverse_characteristic"], tol("oracle")
        ) and passed
    results = {"models": len(models), "n": int(models[0].size)}
    return results, residuals, passed, [], []


_DISPATCH = {
    "weyl": _cmd_weyl,
    "charfn": _cmd_charfn,
    "classify": _cmd_classify,
    "transform": _cmd_transform,
    "verify-invariance": _cmd_verify_invariance,
    "homogeneous": _cmd_homogeneous,
    "oracle": _cmd_oracle,
    "extension-type": _cmd_extension_type,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _csv_text(rows, columns):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_cell(row[key]) for key in columns})
    return buffer.getvalue()


def _csv_cell(value):
    if isinstance(value, float):
        return "NaN" if math.isnan(value) else repr(value)
    return value


def _emit(config, report, rows, failures):
    if config.format == "csv":
        text = _csv_text(rows, CSV_COLUMNS)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if config.output is None:
        print(text, end="")
        return
    _write_atomic(config.output, text)
    logger.info("[green]Wrote[/green] %s", config.output)
    if config.format == "csv" and failures:
        sidecar = config.output + ".failures.csv"
        _write_atomic(sidecar, _csv_text(failures, ("quantity", "re_z", "im_z", "error")))
        logger.info("Failure table: %s", sidecar)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run(config):
    """Execute one command. Never raises for library errors; see RunResult.exit_code."""
    try:
        workers = get_workers(config.root, config.workers)

        def tol(name):
            return get_tolerance(config.root, name, config.tolerance)

        points = _resolve_points(config)
        logger.debug("Running %s on %d grid point(s) with %d worker(s)", config.command, len(points), workers)
        with warnings_to_log():
            results, residuals, passed, rows, failures = _DISPATCH[config.command](config, points, workers, tol)
    except TripleLabError as e:
        logger.error("[red]%s failed:[/red] %s", config.command, e)
        return RunResult(e.exit_code)
    except (OSError, ValueError) as e:
        logger.error("[red]%s failed:[/red] %s", config.command, e)
        return RunResult(EXIT_ERROR)

    report = {
        "command": config.command,
        "config_echo": config.echo(),
        "results": results,
        "residuals": residuals,
        "pass": bool(passed),
        "failures": failures,
        "version": __version__,
    }
    if rows and config.format == "json":
        report["grid"] = rows
    if config.timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")

    try:
        _emit(config, report, rows, failures)
    except OSError as e:
        logger.error("[red]Could not write output:[/red] %s", e)
        return RunResult(EXIT_ERROR, report, rows, failures)

    exit_code = EXIT_OK if passed else EXIT_RESIDUAL
    if not passed:
        logger.error("[red]Verification failed[/red] for %s", config.command)
    return RunResult(exit_code, report, rows, failures)
