"""Protocol pipeline, displacement optimization, grid sweeps and cutoff control."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from .channels import apply_loss
from .distill import (
    DisplacementPair,
    HeraldedState,
    SubtractionModel,
    ideal_displaced_subtract_two,
    ideal_subtract_one,
    TapSubtractor,
)
from .errors import AnnihilatedStateError, ConfigError, DistillError, TruncationError
from .fockcore import DensityOperator, Mode, State
from .measures import log_negativity, quadrature_variances
from .stateprep import SourceKind, gamma_from_nbar, prepare_source

OPTIMIZE = "optimize"
AUTO = "auto"
DIM_STEP = 4
DIM_CAP = 31
DIM_START = 8
LN_CONVERGENCE_TOL = 1e-4
VARIANCE_CONVERGENCE_TOL = 1e-6
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Protocol(enum.Enum):
    INITIAL = "initial"
    ONE_PS = "1ps"
    TWO_PS = "2ps"
    D2PS = "d2ps"

    @classmethod
    def coerce(cls, value) -> "Protocol":
        if isinstance(value, Protocol):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown protocol {value!r}; expected one of {[p.value for p in cls]}"
            ) from None


@dataclass(frozen=True)
class OptimizerSettings:
    """Coarse-grid-plus-golden-section search over real ``alpha >= 0``.

    The coarse grid spans ``[0, span_factor * alpha_weak]`` where ``alpha_weak``
    is ``sqrt(gamma/2)`` (1MSV) or ``sqrt(gamma)`` (2MSV).  A displaced optimum
    is only reported when it beats ``alpha = 0`` by more than ``ln_tol``.
    """

    count: int = 61
    span_factor: float = 3.0
    alpha_tol: float = 1e-4
    ln_tol: float = 1e-6


@dataclass(frozen=True)
class ProtocolConfig:
    source: SourceKind
    nbar: float
    protocol: Protocol
    loss: Union[float, tuple[float, float]] = 0.0
    model: SubtractionModel = SubtractionModel()
    alpha: Union[float, str, None] = None
    dim: Union[int, str] = AUTO

    def __post_init__(self):
        object.__setattr__(self, "source", SourceKind.coerce(self.source))
        object.__setattr__(self, "protocol", Protocol.coerce(self.protocol))
        if not (isinstance(self.nbar, (int, float)) and math.isfinite(self.nbar) and self.nbar >= 0):
            raise ConfigError(f"nbar must be a finite number >= 0, got {self.nbar!r}")
        la, lb = self.losses
        for value in (la, lb):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"loss must lie in [0, 1], got {value!r}")
        if self.protocol is Protocol.D2PS:
            if self.alpha is None:
                raise ConfigError("protocol d2ps needs alpha (a number or 'optimize')")
            if isinstance(self.alpha, str) and self.alpha != OPTIMIZE:
                raise ConfigError(f"alpha must be a number or 'optimize', got {self.alpha!r}")
        if self.dim != AUTO and not (isinstance(self.dim, int) and self.dim >= 2):
            raise ConfigError(f"dim must be 'auto' or an integer >= 2, got {self.dim!r}")

    @property
    def losses(self) -> tuple[float, float]:
        if isinstance(self.loss, (tuple, list)):
            la, lb = self.loss
            return float(la), float(lb)
        return float(self.loss), float(self.loss)

    @property
    def gamma(self) -> float:
        return gamma_from_nbar(self.source, self.nbar)

    @property
    def optimizing(self) -> bool:
        return self.protocol is Protocol.D2PS and self.alpha == OPTIMIZE


@dataclass(frozen=True, eq=False)
class ResultRow:
    """One evaluated point; numeric fields are ``None`` when not applicable or on failure."""

    config: ProtocolConfig
    ln: float | None = None
    var_x_minus: float | None = None
    var_p_plus: float | None = None
    var_total: float | None = None
    success_probability: float | None = None
    alpha: float | None = None
    alpha_opt: float | None = None
    dim_used: int | None = None
    error: str | None = None
    state: State | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


def alpha_weak(source: SourceKind, gamma: float) -> float:
    """Weak-squeezing optimal displacement: ``sqrt(g/2)`` for 1MSV, ``sqrt(g)`` for 2MSV."""
    if SourceKind.coerce(source) is SourceKind.ONE_MSV:
        return math.sqrt(gamma / 2.0)
    return math.sqrt(gamma)


def input_state(config: ProtocolConfig, d: int) -> State:
    """Initial resource after the distribution channels."""
    psi = prepare_source(config.source, config.nbar, d)
    la, lb = config.losses
    if la == 0.0 and lb == 0.0:
        return psi
    return apply_loss(psi, la, lb, validate=False)


def heralder(config: ProtocolConfig, state: State) -> Callable[..., HeraldedState]:
    """Return ``f(alpha, validate=False)`` applying the configured local operation to ``state``.

    Work that does not depend on the displacement is done once, up front.
    """
    proto, model = config.protocol, config.model
    if proto is Protocol.INITIAL:
        return lambda alpha=0.0, validate=False: HeraldedState(state, 1.0)

    def disp(alpha):
        if proto is Protocol.D2PS:
            return DisplacementPair.antisymmetric(alpha)
        return DisplacementPair()

    if model.is_ideal:
        if proto is Protocol.ONE_PS:
            return lambda alpha=0.0, validate=False: ideal_subtract_one(state, Mode.A)
        return lambda alpha=0.0, validate=False: ideal_displaced_subtract_two(state, disp(alpha))
    modes = (Mode.A,) if proto is Protocol.ONE_PS else (Mode.A, Mode.B)
    tap = TapSubtractor(state, model.reflectivity, modes)
    return lambda alpha=0.0, validate=False: tap(disp(alpha), validate=validate)


def herald(config: ProtocolConfig, state: State, alpha: float = 0.0,
           validate: bool = False) -> HeraldedState:
    """Apply the configured local operation to an input state."""
    return heralder(config, state)(alpha, validate=validate)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    c = hi - GOLDEN * (hi - lo)
    e = lo + GOLDEN * (hi - lo)
    fc, fe = f(c), f(e)
    while hi - lo > tol:
        if fc >= fe:
            hi, e, fe = e, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, e, fe
            e = lo + GOLDEN * (hi - lo)
            fe = f(e)
    return (c, fc) if fc >= fe else (e, fe)


def _optimize_at(config: ProtocolConfig, d: int, settings: OptimizerSettings,
                 apply: Callable[..., HeraldedState] | None = None) -> tuple[float, float]:
    if apply is None:
        apply = heralder(config, input_state(config, d))

    def ln_at(alpha: float) -> float:
        try:
            return log_negativity(apply(alpha).state)
        except AnnihilatedStateError:
            return -math.inf

    span = settings.span_factor * alpha_weak(config.source, config.gamma)
    if span <= 0.0:
        raise AnnihilatedStateError("no displacement bracket at zero photon number")
    for _ in range(4):
        grid = np.linspace(0.0, span, settings.count)
        values = [ln_at(a) for a in grid]
        best = int(np.argmax(values))
        # optimum on the upper edge: widen the bracket rather than clip
        if best < settings.count - 1:
            break
        span *= 2.0
    if not math.isfinite(values[best]):
        raise AnnihilatedStateError("herald annihilated at every displacement on the grid")
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, settings.count - 1)]
    alpha, ln = golden_section_max(ln_at, lo, hi, settings.alpha_tol)
    if values[best] > ln:
        alpha, ln = float(grid[best]), values[best]
    ln_zero = values[0]
    if ln <= ln_zero + settings.ln_tol:
        return 0.0, ln_zero
    return float(alpha), float(ln)


def _row_at(config: ProtocolConfig, d: int, settings: OptimizerSettings,
            variances: bool = True, known_opt: float | None = None) -> ResultRow:
    apply = heralder(config, input_state(config, d))
    alpha_opt = None
    alpha = None
    if config.protocol is Protocol.D2PS:
        if config.optimizing:
            if known_opt is None:
                known_opt, _ = _optimize_at(config, d, settings, apply)
            alpha_opt = known_opt
            alpha = alpha_opt
        else:
            alpha = float(config.alpha)
    h = apply(alpha or 0.0, validate=True)
    out = h.state
    if isinstance(out, DensityOperator) and not out.validate:
        out = DensityOperator(out.d, out.matrix)
    ln = log_negativity(out)
    vx = vp = vt = None
    if variances:
        v = quadrature_variances(out)
        vx, vp, vt = v.var_x_minus, v.var_p_plus, v.total
    p = None if config.model.is_ideal or config.protocol is Protocol.INITIAL else h.weight
    return ResultRow(config, ln=ln, var_x_minus=vx, var_p_plus=vp, var_total=vt,
                     success_probability=p, alpha=alpha, alpha_opt=alpha_opt,
                     dim_used=d, state=out)


def ln_at_cutoff(config: ProtocolConfig, d: int, alpha: float | None = None) -> float:
    """LN of the configured protocol at cutoff ``d`` and a fixed displacement."""
    return log_negativity(herald(config, input_state(config, d), alpha or 0.0).state)


def _next_dim(d: int) -> int:
    # the last rung is clipped to the cap so that d = 31 itself is tried
    if d < DIM_CAP:
        return min(d + DIM_STEP, DIM_CAP)
    return d + DIM_STEP


def _first_feasible(config: ProtocolConfig, d: int) -> int:
    while d <= DIM_CAP:
        try:
            input_state(config, d)
            return d
        except TruncationError:
            d = _next_dim(d)
    raise TruncationError(f"source at nbar={config.nbar:g} does not fit any cutoff <= {DIM_CAP}")


def _converge(config: ProtocolConfig, start_d: int, settings: OptimizerSettings) -> ResultRow:
    if start_d < DIM_START:
        raise ConfigError(f"start_d must be >= {DIM_START}, got {start_d}")
    d = _first_feasible(config, start_d)
    probe = None
    known = {}
    if config.optimizing:
        # climb the cutoff ladder at a fixed displacement, then optimize once
        probe, _ = _optimize_at(config, d, settings)
        known[d] = probe
    while d <= DIM_CAP:
        if probe is not None and d not in known:
            if abs(ln_at_cutoff(config, d + DIM_STEP, probe) - ln_at_cutoff(config, d, probe)) >= LN_CONVERGENCE_TOL:
                d = _next_dim(d)
                continue
        row = _row_at(config, d, settings, variances=False, known_opt=known.get(d))
        ref = ln_at_cutoff(config, d + DIM_STEP, row.alpha)
        if abs(ref - row.ln) < LN_CONVERGENCE_TOL:
            return row
        probe = row.alpha if config.optimizing else None
        d = _next_dim(d)
    raise TruncationError(
        f"logarithmic negativity not converged to {LN_CONVERGENCE_TOL:g} for any cutoff <= {DIM_CAP}"
    )


def converge_dim(config: ProtocolConfig, start_d: int = DIM_START,
                 settings: OptimizerSettings | None = None) -> int:
    """Smallest cutoff in ``start_d, start_d+4, ..., 31`` whose LN moves by < 1e-4 at ``d+4``.

    With ``alpha='optimize'`` the optimum is found at ``d`` and the comparison
    point ``d+4`` is evaluated at that same displacement.

    Raises
    ------
    TruncationError
        If no cutoff up to 31 passes.
    """
    return converged_row(config, start_d, settings).dim_used


def converged_row(config: ProtocolConfig, start_d: int = DIM_START,
                  settings: OptimizerSettings | None = None) -> ResultRow:
    """The row (without variances) at the cutoff chosen by :func:`converge_dim`."""
    return _converge(config, start_d, settings or OptimizerSettings())


def evaluate(config: ProtocolConfig, settings: OptimizerSettings | None = None,
             variances: bool = True) -> ResultRow:
    """Run source, channels, subtraction and measures for one configuration.

    With ``dim='auto'`` the cutoff follows :func:`converge_dim`.  When
    variances are requested the cutoff is raised further (within the cap)
    until both variances move by less than 1e-6 at ``d+4``; the returned LN
    is then taken at that larger cutoff.
    """
    settings = settings or OptimizerSettings()
    if config.dim != AUTO:
        return _row_at(config, int(config.dim), settings, variances)
    row = _converge(config, DIM_START, settings)
    if not variances:
        return row
    d = row.dim_used
    alpha = row.alpha_opt
    v = _variances_or_none(row.state)
    while d <= DIM_CAP:
        w = _variances_or_none(_row_at(config, d + DIM_STEP, settings, variances=False, known_opt=alpha).state)
        if v is not None and w is not None and max(
                abs(v.var_x_minus - w.var_x_minus), abs(v.var_p_plus - w.var_p_plus)) < VARIANCE_CONVERGENCE_TOL:
            return replace(row, var_x_minus=v.var_x_minus, var_p_plus=v.var_p_plus, var_total=v.total)
        d = _next_dim(d)
        if d <= DIM_CAP:
            row = _row_at(config, d, settings, variances=False, known_opt=alpha)
            v = _variances_or_none(row.state)
    raise TruncationError(
        f"quadrature variances not converged to {VARIANCE_CONVERGENCE_TOL:g} for any cutoff <= {DIM_CAP}"
    )


def _variances_or_none(state: State):
    try:
        return quadrature_variances(state)
    except TruncationError:
        return None


def optimize_alpha(config: ProtocolConfig, settings: OptimizerSettings | None = None) -> tuple[float, float]:
    """Optimal real ``alpha >= 0`` (with ``beta = -alpha``) and the LN it reaches.

    ``alpha = 0`` is always a candidate, so past the point where displacement
    stops helping the result is exactly the undisplaced two-photon subtraction.
    """
    if config.protocol is not Protocol.D2PS:
        raise ConfigError("optimize_alpha needs protocol d2ps")
    config = replace(config, alpha=OPTIMIZE)
    settings = settings or OptimizerSettings()
    if config.dim == AUTO:
        row = _converge(config, DIM_START, settings)
        return row.alpha_opt, row.ln
    return _optimize_at(config, int(config.dim), settings)


def thread_count(threads: int | None = None) -> int:
    """Worker count: explicit argument, else ``DISTILL_THREADS``, else ``min(4, cpus)``."""
    if threads is not None:
        n = int(threads)
    else:
        env = os.environ.get("DISTILL_THREADS")
        if env is None or env.strip() == "":
            return min(4, os.cpu_count() or 1)
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"DISTILL_THREADS must be a positive integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"thread count must be positive, got {n}")
    return n


def safe_evaluate(config: ProtocolConfig, settings: OptimizerSettings | None = None,
                  variances: bool = True) -> ResultRow:
    """:func:`evaluate`, with failures recorded in the row instead of raised."""
    try:
        return evaluate(config, settings, variances)
    except DistillError as exc:
        return ResultRow(config, error=f"{type(exc).__name__}: {exc}")


def run_configs(configs: Sequence[ProtocolConfig], settings: OptimizerSettings | None = None,
                threads: int | None = None, variances: bool = True) -> list[ResultRow]:
    """Evaluate independent configurations concurrently, results in input order."""
    n = thread_count(threads)
    if n == 1 or len(configs) <= 1:
        return [safe_evaluate(c, settings, variances) for c in configs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda c: safe_evaluate(c, settings, variances), configs))


def sweep_grid(axis: str, grid: Sequence[float], base: ProtocolConfig,
               settings: OptimizerSettings | None = None, threads: int | None = None,
               variances: bool = True) -> list[ResultRow]:
    """One row per grid value of ``nbar``, ``loss`` or ``alpha``, in grid order.

    Failing points carry an ``error`` message; the sweep continues.
    """
    if axis not in ("nbar", "loss", "alpha"):
        raise ConfigError(f"sweep axis must be nbar, loss or alpha, got {axis!r}")
    values = [float(v) for v in grid]
    if not values:
        raise ConfigError("sweep grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("sweep grid must be strictly increasing")
    if axis == "alpha" and base.protocol is not Protocol.D2PS:
        raise ConfigError("an alpha sweep needs protocol d2ps")
    configs = [replace(base, **{axis: v}) for v in values]
    return run_configs(configs, settings, threads, variances)
