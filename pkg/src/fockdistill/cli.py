"""``distill`` command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
from typing import Any, Sequence

from . import __version__
from .distill import SubtractionModel
from .errors import ConfigError, DistillError
from .figures import FIGURES, GRIDS, Table, expand_grid, run_figure
from .measures import fock_populations
from .sweep import (
    AUTO,
    OPTIMIZE,
    ProtocolConfig,
    ResultRow,
    converged_row,
    evaluate,
    ln_at_cutoff,
    run_configs,
)

CONFIG_KEYS = ("source", "nbar", "loss", "protocol", "alpha", "model", "dim")
REQUIRED_KEYS = ("source", "nbar", "protocol")
SWEEP_COLUMNS = ["source", "protocol", "model", "nbar", "loss", "alpha", "alpha_opt", "ln",
                 "var_x_minus", "var_p_plus", "var_total", "p_success", "dim", "status"]


class UsageError(Exception):
    """Bad command line or configuration; exit code 2."""


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float):
        return float(format(value, ".12g"))
    return value


def canonical_hash(obj: Any) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def render(table: Table, fmt: str, provenance: dict) -> str:
    """Serialize a table; only the ``#`` lines (CSV) or ``provenance`` (JSON) carry metadata."""
    digest = canonical_hash(provenance)
    if fmt == "json":
        doc = {
            "tool": f"fockdistill {__version__}",
            "config": provenance,
            "config_sha256": digest,
            "columns": table.columns,
            "rows": [[_json_value(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# fockdistill {__version__}\n")
    buf.write(f"# config-sha256 {digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """Strip the ``#`` provenance lines of a CSV document."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# config files

def _grid(key: str, value: Any) -> list[float]:
    if isinstance(value, bool):
        raise ConfigError(f"key {key!r}: expected a number, list or grid object")
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "count", "log"}
        if extra:
            raise ConfigError(f"key {key!r}: unknown key {sorted(extra)[0]!r} in grid object")
        missing = {"start", "stop", "count"} - set(value)
        if missing:
            raise ConfigError(f"key {key!r}: grid object needs {sorted(missing)}")
        if not isinstance(value["count"], int) or value["count"] < 1:
            raise ConfigError(f"key {key!r}: grid count must be a positive integer")
        if value.get("log", False) and (value["start"] <= 0 or value["stop"] <= 0):
            raise ConfigError(f"key {key!r}: a log grid needs positive start and stop")
    elif isinstance(value, list):
        if not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"key {key!r}: list must hold numbers")
    elif not isinstance(value, (int, float)):
        raise ConfigError(f"key {key!r}: expected a number, list or grid object")
    try:
        return expand_grid(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None


def parse_model(value: Any) -> SubtractionModel:
    if value is None or value == "ideal":
        return SubtractionModel.ideal()
    if isinstance(value, dict) and set(value) == {"tap"}:
        r = value["tap"]
        if isinstance(r, (int, float)) and not isinstance(r, bool):
            return SubtractionModel.tap(r)
    raise ConfigError(f"key 'model': expected \"ideal\" or {{\"tap\": R}}, got {value!r}")


def resolve_config(raw: Any) -> tuple[dict, list[ProtocolConfig]]:
    """Validate a config mapping and expand its grids into configurations.

    Returns the resolved config (defaults filled in) and the cartesian
    product over ``nbar``, ``loss`` and ``alpha`` in that nesting order.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}; allowed keys are {', '.join(CONFIG_KEYS)}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing key {key!r}")
    resolved = {"loss": 0.0, "model": "ideal", "dim": AUTO}
    resolved.update(raw)
    if resolved["protocol"] == "d2ps" and "alpha" not in raw:
        raise ConfigError("key 'alpha': protocol d2ps needs alpha (a number, grid or \"optimize\")")
    resolved.setdefault("alpha", None)

    nbars = _grid("nbar", resolved["nbar"])
    losses = _grid("loss", resolved["loss"])
    alpha = resolved["alpha"]
    alphas = [alpha] if alpha is None or alpha == OPTIMIZE else _grid("alpha", alpha)
    model = parse_model(resolved["model"])
    dim = resolved["dim"]
    if dim != AUTO and (isinstance(dim, bool) or not isinstance(dim, int)):
        raise ConfigError(f"key 'dim': expected \"auto\" or an integer, got {dim!r}")
    configs = []
    for x, loss, a in itertools.product(nbars, losses, alphas):
        try:
            configs.append(ProtocolConfig(resolved["source"], x, resolved["protocol"], loss=loss,
                                          model=model, alpha=a, dim=dim))
        except ConfigError as exc:
            raise ConfigError(f"invalid config: {exc}") from None
    return resolved, configs


def load_config(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None


def _model_label(model: SubtractionModel) -> str:
    return "ideal" if model.is_ideal else f"tap:{format_value(model.reflectivity)}"


def _status(row: ResultRow) -> str:
    return "ok" if row.ok else f"failed: {row.error}"


def rows_table(rows: Sequence[ResultRow]) -> Table:
    table = Table(list(SWEEP_COLUMNS))
    for r in rows:
        c = r.config
        la, lb = c.losses
        alpha = c.alpha if isinstance(c.alpha, (int, float)) else r.alpha
        table.rows.append([
            c.source.value, c.protocol.value, _model_label(c.model), float(c.nbar),
            la if la == lb else f"{format_value(la)}/{format_value(lb)}",
            None if alpha is None else float(alpha), r.alpha_opt, r.ln,
            r.var_x_minus, r.var_p_plus, r.var_total, r.success_probability, r.dim_used, _status(r),
        ])
    return table


# commands

def _config_from_flags(args: argparse.Namespace) -> ProtocolConfig:
    alpha: Any = args.alpha
    if alpha is not None and alpha != OPTIMIZE:
        try:
            alpha = float(alpha)
        except ValueError:
            raise ConfigError(f"--alpha must be a number or 'optimize', got {alpha!r}") from None
    loss = args.loss if args.loss_b is None else (args.loss, args.loss_b)
    model = SubtractionModel.ideal() if args.tap is None else SubtractionModel.tap(args.tap)
    dim: Any = args.dim
    if dim != AUTO:
        try:
            dim = int(dim)
        except ValueError:
            raise ConfigError(f"--dim must be 'auto' or an integer, got {dim!r}") from None
    return ProtocolConfig(args.source, args.nbar, args.protocol, loss=loss, model=model,
                          alpha=alpha, dim=dim)


def cmd_figure(args: argparse.Namespace) -> int:
    table = run_figure(args.figure_id, threads=args.threads)
    provenance = {"figure": args.figure_id, "grid": GRIDS[args.figure_id]}
    _emit(render(table, args.format, provenance), args.out)
    failed = sum(1 for row in table.rows if row[-1] != "ok")
    if failed:
        print(f"figure {args.figure_id}: {failed} of {len(table.rows)} rows carry failure markers",
              file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    resolved, configs = resolve_config(load_config(args.config))
    rows = run_configs(configs, threads=args.threads, variances=not args.no_variances)
    _emit(render(rows_table(rows), args.format, resolved), args.out)
    failed = sum(1 for r in rows if not r.ok)
    if failed:
        print(f"sweep: {failed} of {len(rows)} points failed", file=sys.stderr)
    return 0


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else format(value, ".10g")


def cmd_point(args: argparse.Namespace) -> int:
    config = _config_from_flags(args)
    row = evaluate(config)
    out = sys.stdout
    print(f"source        {config.source.value}", file=out)
    print(f"protocol      {config.protocol.value}", file=out)
    print(f"model         {_model_label(config.model)}", file=out)
    print(f"nbar          {_fmt(float(config.nbar))}  (gamma {_fmt(config.gamma)})", file=out)
    print(f"loss          {_fmt(config.losses[0])} / {_fmt(config.losses[1])}", file=out)
    if row.alpha is not None:
        suffix = "  (optimized)" if row.alpha_opt is not None else ""
        print(f"alpha         {_fmt(row.alpha)}{suffix}", file=out)
    print(f"ln            {_fmt(row.ln)}", file=out)
    print(f"var_x_minus   {_fmt(row.var_x_minus)}", file=out)
    print(f"var_p_plus    {_fmt(row.var_p_plus)}", file=out)
    print(f"var_total     {_fmt(row.var_total)}", file=out)
    print(f"p_success     {_fmt(row.success_probability)}", file=out)
    print(f"dim           {row.dim_used}", file=out)
    print("populations (top 8)", file=out)
    for (m, n), p in fock_populations(row.state)[:8]:
        print(f"  |{m},{n}>  {p:.10g}", file=out)
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    config = _config_from_flags(args)
    row = converged_row(config, start_d=args.start)
    d = row.dim_used
    ref = ln_at_cutoff(config, d + 4, row.alpha)
    print(f"dim           {d}")
    print(f"ln(d)         {_fmt(row.ln)}")
    print(f"ln(d+4)       {_fmt(ref)}")
    print(f"difference    {abs(ref - row.ln):.3g}")
    if row.alpha is not None:
        print(f"alpha         {_fmt(row.alpha)}")
    return 0


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _add_point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", required=True, choices=["1msv", "2msv"], help="entangled resource")
    p.add_argument("--nbar", required=True, type=float, help="total mean photon number of the source")
    p.add_argument("--protocol", required=True, choices=["initial", "1ps", "2ps", "d2ps"])
    p.add_argument("--alpha", help="displacement amplitude (beta = -alpha) or 'optimize'; d2ps only")
    p.add_argument("--loss", type=float, default=0.0, help="channel loss on mode A (and B unless --loss-b)")
    p.add_argument("--loss-b", type=float, default=None, help="channel loss on mode B")
    p.add_argument("--tap", type=float, default=None, metavar="R",
                   help="tap-and-click subtraction with reflectivity R (default: ideal)")
    p.add_argument("--dim", default=AUTO, help="Fock cutoff per mode, or 'auto' (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distill",
        description="Displacement-enhanced photon-subtraction distillation in truncated Fock space.",
        epilog="Exit codes: 0 success, 1 runtime failure, 2 usage or config error. "
               "DISTILL_THREADS caps the worker count.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    fig = sub.add_parser("figure", help="emit the data grid behind one figure",
                         description=f"Figure ids: {', '.join(FIGURES)}.")
    fig.add_argument("figure_id", choices=list(FIGURES), metavar="ID",
                     help=f"one of {', '.join(FIGURES)}")
    fig.add_argument("--out", help="output path (default: standard output)")
    fig.add_argument("--format", choices=["csv", "json"], default="csv")
    fig.add_argument("--threads", type=_positive_int, help="worker threads (default: DISTILL_THREADS)")
    fig.set_defaults(func=cmd_figure)

    sw = sub.add_parser("sweep", help="evaluate every point of a JSON config grid")
    sw.add_argument("--config", required=True, help="JSON config file")
    sw.add_argument("--out", help="output path (default: standard output)")
    sw.add_argument("--format", choices=["csv", "json"], default="csv")
    sw.add_argument("--threads", type=_positive_int, help="worker threads (default: DISTILL_THREADS)")
    sw.add_argument("--no-variances", action="store_true", help="skip the quadrature variances")
    sw.set_defaults(func=cmd_sweep)

    pt = sub.add_parser("point", help="human-readable report for one configuration")
    _add_point_flags(pt)
    pt.set_defaults(func=cmd_point)

    cv = sub.add_parser("converge", aliases=["convergence"], help="report the converged Fock cutoff")
    _add_point_flags(cv)
    cv.add_argument("--start", type=int, default=8, help="first cutoff of the ladder (default 8)")
    cv.set_defaults(func=cmd_converge)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"distill: error: {exc}", file=sys.stderr)
        return 2
    except (DistillError, OSError) as exc:
        print(f"distill: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
