"""Command-line frontend: ``subsym <command> [options]``.

═══════════════════════════════════════════════════════════════════════
EXIT CODES
═══════════════════════════════════════════════════════════════════════

  0  success
  1  validation error (bad parameters, unmet precondition)
  2  numerical failure (quadrature, strip, moment, truncation, simulation)
  3  I/O error (missing or unparseable files)

Reports are written as JSON, sweeps as CSV, to stdout or ``--out``. On
failure an ErrorReport document is written instead:

{
  "error_code": "NO_EXPONENTIAL_MOMENT",
  "message": "E exp(Y_1) is infinite: ...",
  "timestamp": "2026-02-01T12:34:56.789Z",
  "details": {...}
}

Logs go to stderr as structured JSON.
═══════════════════════════════════════════════════════════════════════
"""

import argparse
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, List, Literal, NamedTuple, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from subsym.core.config import settings
from subsym.core.errors import ConditioningError, DataIOError, ExitCodes, ParameterValidationError, SubsymError, Violation
from subsym.core.logging_config import configure_logging
from subsym.schemas.models import OptionSpec, TcbmModel
from subsym.schemas.reports import ExponentReport, ExponentValue
from subsym.services import charfn, density, mc, pricing
from subsym.services.models import (
    dump_model_document,
    load_market,
    load_model_document,
    violations_from_pydantic,
)

logger = structlog.get_logger(__name__)

Command = Literal[
    "cf-eval", "density", "symmetry-check", "calibrate", "price",
    "duality-check", "cm-check", "simulate", "ecf",
]

MODEL_SCHEMA_HELP = """\
model documents (JSON, lowercase fields, unknown fields rejected):

  {"type": "tcbm",
   "bm": {"mu": -0.5, "sigma": 1.0},
   "subordinator": {"kind": "stable", "a": 1.0, "alpha": 0.5},
   "gamma": 0.0}

  subordinator is either
    {"kind": "stable", "a": A > 0, "alpha": in (0,1)} or
    {"kind": "tempered_stable", "c": C > 0, "lambda": > 0, "alpha": in (0,1)}

  {"type": "cgmy", "c": > 0, "g": > 0, "m": > 0, "y": in (0,1)}
  {"type": "meixner", "a": > 0, "b": in (-pi, pi), "d": > 0}

market documents:

  {"r": >= 0, "delta": >= 0, "spot": > 0}
"""

_NEEDS_MODEL = {"cf-eval", "density", "symmetry-check", "calibrate", "price", "duality-check", "cm-check", "simulate"}
_NEEDS_MARKET = {"calibrate", "price", "duality-check"}


class RunConfig(BaseModel):
    """A validated CLI invocation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    model_path: Optional[Path] = None
    market_path: Optional[Path] = None
    in_path: Optional[Path] = None
    out: Optional[Path] = None

    z: List[float] = Field(default_factory=lambda: [1.0])
    z_im: float = 0.0
    t: float = 1.0
    x: List[float] = Field(default_factory=list)
    grid: Optional[List[float]] = None
    tol: Optional[float] = None

    strike: Optional[float] = None
    maturity: Optional[float] = None
    kind: Literal["call", "put"] = "call"
    damping: float = Field(default_factory=lambda: settings.PRICING_DAMPING)
    grid_points: int = Field(default_factory=lambda: settings.PRICING_GRID_POINTS)

    order: int = 6
    grid_step: float = 1e-3

    horizon: float = 1.0
    steps: int = 1
    paths: int = 10_000
    seed: int = 0
    workers: int = Field(default_factory=lambda: settings.MC_WORKERS)
    log_level: Optional[str] = None

    @field_validator("t", "horizon")
    @classmethod
    def validate_time(cls, v: float, info) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{info.field_name} must be > 0, got {v}")
        return v

    @field_validator("strike", "maturity")
    @classmethod
    def validate_option_terms(cls, v: Optional[float], info) -> Optional[float]:
        if v is not None and not (math.isfinite(v) and v > 0):
            raise ValueError(f"{info.field_name} must be > 0, got {v}")
        return v

    @field_validator("damping", "grid_step")
    @classmethod
    def validate_positive(cls, v: float, info) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{info.field_name} must be > 0, got {v}")
        return v

    @field_validator("tol")
    @classmethod
    def validate_tol(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0 < v < 1:
            raise ValueError(f"tol out of (0,1), got {v}")
        return v

    @field_validator("grid_points")
    @classmethod
    def validate_grid_points(cls, v: int) -> int:
        if v < 16:
            raise ValueError(f"grid_points must be >= 16, got {v}")
        return v

    @field_validator("order")
    @classmethod
    def validate_order(cls, v: int) -> int:
        if not 1 <= v <= settings.CM_MAX_ORDER:
            raise ValueError(f"order out of [1, {settings.CM_MAX_ORDER}], got {v}")
        return v

    @field_validator("steps", "paths", "workers")
    @classmethod
    def validate_count(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be >= 1, got {v}")
        return v

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"seed must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def check_command_inputs(self):
        missing = []
        if self.command in _NEEDS_MODEL and self.model_path is None:
            missing.append("model_path")
        if self.command in _NEEDS_MARKET and self.market_path is None:
            missing.append("market_path")
        if self.command in ("price", "duality-check"):
            missing += [name for name in ("strike", "maturity") if getattr(self, name) is None]
        if self.command == "density" and not self.x:
            missing.append("x")
        if self.command == "ecf" and self.in_path is None:
            missing.append("in_path")
        if missing:
            raise ValueError(f"command {self.command} requires {', '.join(missing)}")
        return self


class RunResult(NamedTuple):
    exit_code: int
    document: str


# ═══════════════════════════════════════════════════════════════════════
# OUTPUT FORMATTING
# ═══════════════════════════════════════════════════════════════════════

def _render(value: Any) -> str:
    """JSON with floats at 17 significant digits (deterministic)."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return json.dumps(value)
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else json.dumps(str(value))
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    return json.dumps(value)


def render_report(report: BaseModel) -> str:
    return _render(report.model_dump(mode="python", by_alias=True)) + "\n"


def _csv(rows: List[List[float]], header: List[str]) -> str:
    lines = [",".join(header)]
    lines += [",".join(format(v, ".17g") for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ═══════════════════════════════════════════════════════════════════════
# COMMANDS
# ═══════════════════════════════════════════════════════════════════════

def _cf_eval(config: RunConfig) -> str:
    model = load_model_document(config.model_path)
    values = []
    for z in config.z:
        psi = complex(charfn.char_exponent(model, complex(z, config.z_im)))
        values.append(ExponentValue(z_re=z, z_im=config.z_im, re=psi.real, im=psi.imag))
    return render_report(ExponentReport(model_type=model.type, values=values))


def _density(config: RunConfig) -> str:
    model = load_model_document(config.model_path)
    nu = density.levy_density(model)
    rows = []
    for x in config.x:
        f = density.even_factor(model, x) if isinstance(model, TcbmModel) else nu.even_part(x)
        rows.append([x, nu(x), f])
    return _csv(rows, ["x", "nu", "f"])


def _symmetry_check(config: RunConfig) -> str:
    model = load_model_document(config.model_path)
    report = density.classify_symmetry(model, config.grid, tol=config.tol, workers=config.workers)
    return render_report(report)


def _calibrate(config: RunConfig) -> str:
    model = _require_tcbm(load_model_document(config.model_path), "calibrate")
    calibrated, report = pricing.calibration_report(model, load_market(config.market_path))
    logger.info("calibration_report", gamma=report.gamma, gap_before=report.gap_before, gap_after=report.gap_after)
    return dump_model_document(calibrated) + "\n"


def _price(config: RunConfig) -> str:
    model = _require_tcbm(load_model_document(config.model_path), "price")
    opt = OptionSpec(strike=config.strike, maturity=config.maturity, kind=config.kind)
    report = pricing.price_european(
        model, load_market(config.market_path), opt, damping=config.damping, grid_points=config.grid_points
    )
    return render_report(report)


def _duality_check(config: RunConfig) -> str:
    model = _require_tcbm(load_model_document(config.model_path), "duality-check")
    opt = OptionSpec(strike=config.strike, maturity=config.maturity, kind="call")
    report = pricing.duality_check(model, load_market(config.market_path), opt, grid_points=config.grid_points)
    return render_report(report)


def _cm_check(config: RunConfig) -> str:
    model = load_model_document(config.model_path)
    report = density.complete_monotonicity_check(
        model, config.order, config.grid_step, tol=config.tol, workers=config.workers
    )
    if not report.conditioned:
        raise ConditioningError(
            f"finite differences of order {report.ill_conditioned_order} amplify quadrature noise above tol_k",
            details=report.model_dump(),
        )
    return render_report(report)


def _simulate(config: RunConfig) -> str:
    model = _require_tcbm(load_model_document(config.model_path), "simulate")
    paths = mc.simulate_paths(model, config.horizon, config.steps, config.paths, config.seed, workers=config.workers)
    buffer = io.StringIO()
    mc.write_paths_csv(paths, buffer)
    return buffer.getvalue()


def _ecf(config: RunConfig) -> str:
    paths = mc.read_paths_csv(config.in_path)
    return "".join(render_report(mc.empirical_cf(paths, z, config.t)) for z in config.z)


def _require_tcbm(model, command: str) -> TcbmModel:
    if not isinstance(model, TcbmModel):
        raise ParameterValidationError(
            [Violation(field="type", message=f"{command} needs a tcbm model, got {model.type}", bound="tcbm")]
        )
    return model


_COMMANDS = {
    "cf-eval": _cf_eval,
    "density": _density,
    "symmetry-check": _symmetry_check,
    "calibrate": _calibrate,
    "price": _price,
    "duality-check": _duality_check,
    "cm-check": _cm_check,
    "simulate": _simulate,
    "ecf": _ecf,
}


def run(config: RunConfig) -> RunResult:
    """Dispatch one command; failures become an ErrorReport document."""
    structlog.contextvars.bind_contextvars(command=config.command)
    try:
        document = _COMMANDS[config.command](config)
    except SubsymError as exc:
        logger.warning(
            "cli_command_failed",
            error_code=exc.error_code,
            error_message=exc.message,
        )
        return RunResult(exc.exit_code, render_report(exc.to_report()))
    except ValidationError as exc:
        error = ParameterValidationError(violations_from_pydantic(exc))
        logger.warning("cli_command_failed", error_code=error.error_code, error_message=error.message)
        return RunResult(error.exit_code, render_report(error.to_report()))
    except Exception as exc:
        logger.error("cli_unexpected_error", error_type=type(exc).__name__, exc_info=True)
        report = SubsymError(f"unexpected {type(exc).__name__}: {exc}").to_report()
        return RunResult(ExitCodes.NUMERICAL, render_report(report))
    finally:
        structlog.contextvars.unbind_contextvars("command")
    logger.info("cli_command_completed", command=config.command)
    return RunResult(ExitCodes.SUCCESS, document)


# ═══════════════════════════════════════════════════════════════════════
# ARGUMENT PARSING
# ═══════════════════════════════════════════════════════════════════════

class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the validation exit code."""

    def error(self, message):
        raise ParameterValidationError([Violation(field="argv", message=message, bound=None)])


def build_parser() -> _Parser:
    parser = _Parser(
        prog="subsym",
        description="Levy market models as subordinated Brownian motion.",
        epilog=MODEL_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")

    common = _Parser(add_help=False)
    common.add_argument("--model", dest="model_path", type=Path, help="model document (JSON)")
    common.add_argument("--market", dest="market_path", type=Path, help="market document (JSON)")
    common.add_argument("--out", type=Path, help="write output here instead of stdout")
    common.add_argument("--workers", type=int, default=settings.MC_WORKERS, help="parallel workers for sweeps")
    common.add_argument("--log-level", default=None, help="override SUBSYM_LOG_LEVEL")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name, parents=[common], help=help_text, epilog=MODEL_SCHEMA_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("cf-eval", "characteristic exponent psi(z) (JSON)")
    p.add_argument("--z", type=float, nargs="+", default=[1.0])
    p.add_argument("--z-im", type=float, default=0.0, help="imaginary part added to every z")

    p = add("density", "Levy density sweep (CSV: x, nu, f)")
    p.add_argument("--x", type=float, nargs="+", required=True)

    p = add("symmetry-check", "symmetry classification with density-grid confirmation (JSON)")
    p.add_argument("--grid", type=float, nargs="+")
    p.add_argument("--tol", type=float, default=settings.SYMMETRY_TOL)

    add("calibrate", "martingale drift calibration (JSON model document)")

    for name, text in (("price", "European option price (JSON)"), ("duality-check", "primal call vs dual put (JSON)")):
        p = add(name, text)
        p.add_argument("--strike", type=float, required=True)
        p.add_argument("--maturity", type=float, required=True)
        p.add_argument("--grid-points", type=int, default=settings.PRICING_GRID_POINTS)
        if name == "price":
            p.add_argument("--kind", choices=["call", "put"], default="call")
            p.add_argument("--damping", type=float, default=settings.PRICING_DAMPING)

    p = add("cm-check", "finite-difference subordination check (JSON)")
    p.add_argument("--order", type=int, default=6)
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=settings.CM_TOL)

    p = add("simulate", "simulate paths (CSV: path_id, t, clock, y)")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = add("ecf", "empirical characteristic function of simulated paths (JSON)")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--z", type=float, nargs="+", default=[1.0])
    p.add_argument("--t", type=float, default=1.0)

    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    """argv -> RunConfig.

    Raises:
        ParameterValidationError: bad flags or out-of-range values.
    """
    namespace = vars(build_parser().parse_args(argv))
    try:
        return RunConfig(**{k: v for k, v in namespace.items() if v is not None})
    except ValidationError as exc:
        raise ParameterValidationError(violations_from_pydantic(exc)) from exc


def _emit(document: str, out: Optional[Path]) -> int:
    if out is None:
        sys.stdout.write(document)
        return ExitCodes.SUCCESS
    try:
        out.write_text(document, encoding="utf-8")
    except OSError as exc:
        error = DataIOError(f"cannot write {out}: {exc}", details={"path": str(out)})
        sys.stdout.write(render_report(error.to_report()))
        return error.exit_code
    return ExitCodes.SUCCESS


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except ParameterValidationError as exc:
        configure_logging(stream=sys.stderr)
        sys.stdout.write(render_report(exc.to_report()))
        return exc.exit_code
    configure_logging(stream=sys.stderr, level=config.log_level)

    result = run(config)
    if result.exit_code != ExitCodes.SUCCESS:
        sys.stdout.write(result.document)
        return result.exit_code
    return _emit(result.document, config.out)


if __name__ == "__main__":
    sys.exit(main())
