"""Data tables behind each figure of the study, on fixed documented grids.

Every figure function returns a :class:`Table`.  Grids live in ``GRIDS`` and
are echoed into the table metadata so the output carries its own provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distill import SubtractionModel
from .measures import fock_populations
from .sweep import (
    OPTIMIZE,
    Protocol,
    ProtocolConfig,
    ResultRow,
    alpha_weak,
    run_configs,
)
from .stateprep import SourceKind, gamma_from_nbar

SOURCES = (SourceKind.ONE_MSV, SourceKind.TWO_MSV)
PROTOCOLS = (Protocol.INITIAL, Protocol.ONE_PS, Protocol.TWO_PS, Protocol.D2PS)
SUBTRACTIONS = (Protocol.ONE_PS, Protocol.TWO_PS, Protocol.D2PS)
SHORT = {Protocol.INITIAL: "init", Protocol.ONE_PS: "1ps", Protocol.TWO_PS: "2ps", Protocol.D2PS: "d2ps"}
LOSS_STEPS = [round(0.15 * i, 2) for i in range(7)]


def _logspace(lo: float, hi: float, count: int) -> list[float]:
    return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), count)]


def _linspace(lo: float, hi: float, count: int) -> list[float]:
    return [float(x) for x in np.linspace(lo, hi, count)]


GRIDS: dict[str, dict] = {
    "2a": {"nbar": {"start": 1e-3, "stop": 1.0, "count": 81, "log": True}},
    "2b": {"source": "1msv", "nbar": {"start": 1e-3, "stop": 1.0, "count": 31, "log": True},
           "alpha": {"start": 0.0, "stop": 1.2, "count": 61, "log": False}},
    "2c": {"source": "2msv", "nbar": {"start": 1e-3, "stop": 1.0, "count": 31, "log": True},
           "alpha": {"start": 0.0, "stop": 0.8, "count": 61, "log": False}},
    "3": {"source": "1msv", "nbar": 0.1, "max_photons_per_mode": 4},
    "4": {"nbar": {"start": 1e-3, "stop": 1.0, "count": 41, "log": True}},
    "5a": {"nbar": 0.1, "loss": {"start": 0.0, "stop": 0.95, "count": 39, "log": False}},
    "5b": {"nbar": 0.1, "loss": LOSS_STEPS,
           "alpha": {"start": 0.0, "stop": 0.8, "count": 41, "log": False}},
    "6a": {"loss": LOSS_STEPS, "nbar": {"start": 1e-3, "stop": 1.0, "count": 16, "log": True}},
    "6b": {"loss": LOSS_STEPS, "nbar": {"start": 1e-3, "stop": 1.0, "count": 16, "log": True}},
    "7a": {"reflectivity": 0.05, "nbar": {"start": 1e-3, "stop": 1.0, "count": 31, "log": True}},
    "7b": {"reflectivity": 0.05, "nbar": {"start": 1e-3, "stop": 1.0, "count": 31, "log": True}},
}


def expand_grid(spec) -> list[float]:
    """A number, an explicit list, or ``{start, stop, count, log}``."""
    if isinstance(spec, dict):
        count = int(spec["count"])
        if spec.get("log", False):
            return _logspace(float(spec["start"]), float(spec["stop"]), count)
        return _linspace(float(spec["start"]), float(spec["stop"]), count)
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    return [float(spec)]


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def curve_name(source: SourceKind, protocol: Protocol) -> str:
    return f"{source.value}_{SHORT[protocol]}"


def _config(source, protocol, nbar, **kw) -> ProtocolConfig:
    if protocol is Protocol.D2PS and "alpha" not in kw:
        kw["alpha"] = OPTIMIZE
    return ProtocolConfig(source, nbar, protocol, **kw)


def _status(failed: list[str]) -> str:
    return "ok" if not failed else "failed:" + ",".join(failed)


def _wide(axis_name: str, axis_values: list[float], curves: list[tuple[SourceKind, Protocol]],
          make: Callable[[SourceKind, Protocol, float], ProtocolConfig],
          value: Callable[[ResultRow], float | None], prefix: str, threads: int | None,
          alpha_columns: bool = True) -> Table:
    configs = [make(s, p, x) for x in axis_values for s, p in curves]
    results = run_configs(configs, threads=threads, variances=False)
    names = [curve_name(s, p) for s, p in curves]
    opt_curves = [(i, s) for i, (s, p) in enumerate(curves) if p is Protocol.D2PS] if alpha_columns else []
    columns = [axis_name] + [f"{prefix}_{n}" for n in names]
    columns += [f"alpha_opt_{s.value}" for _, s in opt_curves] + ["status"]
    table = Table(columns)
    k = len(curves)
    for j, x in enumerate(axis_values):
        chunk = results[j * k:(j + 1) * k]
        failed = [names[i] for i, r in enumerate(chunk) if not r.ok]
        row = [x] + [value(r) if r.ok else None for r in chunk]
        row += [chunk[i].alpha_opt if chunk[i].ok else None for i, _ in opt_curves]
        table.rows.append(row + [_status(failed)])
    return table


def figure_2a(threads: int | None = None) -> Table:
    """LN of all eight source/protocol curves against the initial photon number."""
    grid = expand_grid(GRIDS["2a"]["nbar"])
    curves = [(s, p) for s in SOURCES for p in PROTOCOLS]
    return _wide("nbar", grid, curves, lambda s, p, x: _config(s, p, x),
                 lambda r: r.ln, "ln", threads)


def _alpha_map(key: str, threads: int | None) -> Table:
    spec = GRIDS[key]
    source = SourceKind.coerce(spec["source"])
    nbars = expand_grid(spec["nbar"])
    alphas = expand_grid(spec["alpha"])
    optimal = run_configs([_config(source, Protocol.D2PS, x) for x in nbars],
                          threads=threads, variances=False)
    fixed = run_configs([_config(source, Protocol.D2PS, x, alpha=a) for x in nbars for a in alphas],
                        threads=threads, variances=False)
    table = Table(["nbar", "alpha", "ln", "alpha_opt", "ln_opt", "alpha_weak", "status"])
    for i, x in enumerate(nbars):
        best = optimal[i]
        weak = alpha_weak(source, gamma_from_nbar(source, x))
        for j, a in enumerate(alphas):
            r = fixed[i * len(alphas) + j]
            failed = [n for n, rr in (("point", r), ("optimum", best)) if not rr.ok]
            table.rows.append([x, a, r.ln, best.alpha_opt, best.ln, weak, _status(failed)])
    return table


def figure_2b(threads: int | None = None) -> Table:
    """1MSV D2PS LN over the (photon number, displacement) plane with the optimal ridge."""
    return _alpha_map("2b", threads)


def figure_2c(threads: int | None = None) -> Table:
    """As 2b for the two-mode squeezed vacuum."""
    return _alpha_map("2c", threads)


def figure_3(threads: int | None = None) -> Table:
    """Fock-basis weights of the 1MSV states before and after each protocol."""
    spec = GRIDS["3"]
    source = SourceKind.coerce(spec["source"])
    top = int(spec["max_photons_per_mode"])
    results = run_configs([_config(source, p, spec["nbar"]) for p in PROTOCOLS],
                          threads=threads, variances=False)
    names = [SHORT[p] for p in PROTOCOLS]
    weights = []
    for r in results:
        weights.append(dict(fock_populations(r.state)) if r.ok else {})
    failed = [n for n, r in zip(names, results) if not r.ok]
    table = Table(["m", "n"] + [f"p_{n}" for n in names] + ["status"])
    for total in range(2 * top + 1):
        for m in range(top + 1):
            n = total - m
            if 0 <= n <= top:
                table.rows.append([m, n] + [w.get((m, n)) if w else None for w in weights]
                                  + [_status(failed)])
    return table


def figure_4(threads: int | None = None) -> Table:
    """Two-mode squeezing variances of every curve of 2a, plus the vacuum reference."""
    grid = expand_grid(GRIDS["4"]["nbar"])
    curves = [(s, p) for s in SOURCES for p in PROTOCOLS]
    configs = [_config(s, p, x) for s, p in curves for x in grid]
    results = run_configs(configs, threads=threads, variances=True)
    table = Table(["source", "protocol", "nbar", "var_x_minus", "var_p_plus", "total", "ln", "status"])
    table.rows.append(["vacuum", "reference", 0.0, 1.0, 1.0, 2.0, 0.0, "ok"])
    for (s, p), x, r in zip([c for c in curves for _ in grid], grid * len(curves), results):
        if r.ok:
            table.rows.append([s.value, p.value, x, r.var_x_minus, r.var_p_plus, r.var_total, r.ln, "ok"])
        else:
            table.rows.append([s.value, p.value, x, None, None, None, None, _status(["point"])])
    return table


def figure_5a(threads: int | None = None) -> Table:
    """LN against symmetric channel loss at fixed photon number."""
    spec = GRIDS["5a"]
    losses = expand_grid(spec["loss"])
    curves = [(s, p) for s in SOURCES for p in PROTOCOLS]
    return _wide("loss", losses, curves, lambda s, p, x: _config(s, p, spec["nbar"], loss=x),
                 lambda r: r.ln, "ln", threads)


def figure_5b(threads: int | None = None) -> Table:
    """D2PS LN against displacement for a ladder of channel losses."""
    spec = GRIDS["5b"]
    losses = expand_grid(spec["loss"])
    alphas = expand_grid(spec["alpha"])
    keys = [(s, l, a) for s in SOURCES for l in losses for a in alphas]
    results = run_configs([_config(s, Protocol.D2PS, spec["nbar"], loss=l, alpha=a) for s, l, a in keys],
                          threads=threads, variances=False)
    table = Table(["source", "loss", "alpha", "ln", "status"])
    for (s, l, a), r in zip(keys, results):
        table.rows.append([s.value, l, a, r.ln, _status([] if r.ok else ["point"])])
    return table


def _loss_ladder(field_name: str, threads: int | None) -> Table:
    spec = GRIDS["6a"]
    losses = expand_grid(spec["loss"])
    nbars = expand_grid(spec["nbar"])
    keys = [(s, l, x) for s in SOURCES for l in losses for x in nbars]
    results = run_configs([_config(s, Protocol.D2PS, x, loss=l) for s, l, x in keys],
                          threads=threads, variances=False)
    table = Table(["source", "loss", "nbar", field_name, "dim", "status"])
    for (s, l, x), r in zip(keys, results):
        val = getattr(r, "alpha_opt" if field_name == "alpha_opt" else "ln") if r.ok else None
        table.rows.append([s.value, l, x, val, r.dim_used, _status([] if r.ok else ["point"])])
    return table


def figure_6a(threads: int | None = None) -> Table:
    """Optimal displacement against photon number for each channel loss."""
    return _loss_ladder("alpha_opt", threads)


def figure_6b(threads: int | None = None) -> Table:
    """Best attainable D2PS LN against photon number for each channel loss."""
    return _loss_ladder("ln_opt", threads)


def figure_7a(threads: int | None = None) -> Table:
    """LN with tap-and-click subtraction (R = 5%)."""
    spec = GRIDS["7a"]
    model = SubtractionModel.tap(spec["reflectivity"])
    curves = [(s, p) for s in SOURCES for p in SUBTRACTIONS]
    return _wide("nbar", expand_grid(spec["nbar"]), curves,
                 lambda s, p, x: _config(s, p, x, model=model), lambda r: r.ln, "ln", threads)


def figure_7b(threads: int | None = None) -> Table:
    """Heralding success probability with tap-and-click subtraction (R = 5%)."""
    spec = GRIDS["7b"]
    model = SubtractionModel.tap(spec["reflectivity"])
    curves = [(s, p) for s in SOURCES for p in SUBTRACTIONS]
    return _wide("nbar", expand_grid(spec["nbar"]), curves,
                 lambda s, p, x: _config(s, p, x, model=model), lambda r: r.success_probability,
                 "p", threads, alpha_columns=False)


FIGURES: dict[str, Callable[[int | None], Table]] = {
    "2a": figure_2a, "2b": figure_2b, "2c": figure_2c, "3": figure_3, "4": figure_4,
    "5a": figure_5a, "5b": figure_5b, "6a": figure_6a, "6b": figure_6b,
    "7a": figure_7a, "7b": figure_7b,
}


def run_figure(figure_id: str, threads: int | None = None) -> Table:
    try:
        build = FIGURES[figure_id]
    except KeyError:
        raise KeyError(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}") from None
    table = build(threads)
    table.meta = {"figure": figure_id, "grid": GRIDS[figure_id]}
    return table
