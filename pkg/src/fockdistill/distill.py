"""Local distillation operations: ideal and realistic (tap) photon subtraction.

The ideal displaced two-photon subtraction uses the effective operator
``(a + alpha) x (b + beta) = D(-alpha) a D(alpha) x D(-beta) b D(beta)``, i.e.
displace, subtract, displace back.  Heralded states are therefore
re-centred; entanglement, central moments and the protocol are unaffected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .channels import _loss_on_axis
from .errors import ConfigError, HeraldError
from .fockcore import (
    DensityOperator,
    Mode,
    PureState,
    State,
    apply_local,
    displacement,
    ladder,
    normalize,
    spread_dim,
    workspace_dim,
)

HERALD_FLOOR = 1e-15
# below this success probability the inclusion-exclusion sum loses too many digits
# to cancellation and the click branch is summed term by term instead
DIRECT_SUM_BELOW = 1e-5


@dataclass(frozen=True)
class DisplacementPair:
    """Local displacement amplitudes for mode A (``alpha``) and mode B (``beta``)."""

    alpha: complex = 0.0
    beta: complex = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ConfigError("displacement amplitudes must be finite")

    @classmethod
    def antisymmetric(cls, alpha: float) -> "DisplacementPair":
        """The protocol's default choice: real ``alpha`` and ``beta = -alpha``."""
        alpha = float(alpha)
        return cls(alpha, -alpha)


@dataclass(frozen=True)
class SubtractionModel:
    """``reflectivity=None`` is ideal subtraction; a value in (0, 1) is the tap model."""

    reflectivity: float | None = None

    def __post_init__(self):
        r = self.reflectivity
        if r is not None and not 0.0 < r < 1.0:
            raise ConfigError(f"tap reflectivity must lie in (0, 1), got {r!r}")

    @classmethod
    def ideal(cls) -> "SubtractionModel":
        return cls(None)

    @classmethod
    def tap(cls, reflectivity: float) -> "SubtractionModel":
        return cls(float(reflectivity))

    @property
    def is_ideal(self) -> bool:
        return self.reflectivity is None


@dataclass(frozen=True, eq=False)
class HeraldedState:
    """Normalized conditional state and its weight.

    For ideal subtraction ``weight`` is the squared norm (or trace) removed by
    renormalization; for the tap model it is the success probability.
    """

    state: State
    weight: float

    @property
    def rho(self) -> DensityOperator:
        if isinstance(self.state, PureState):
            return self.state.to_density()
        return self.state


def ideal_subtract_one(state: State, mode: Union[Mode, str] = Mode.A) -> HeraldedState:
    """Apply the annihilation operator to one mode and renormalize."""
    a, _ = ladder(state.d)
    if Mode.coerce(mode) is Mode.A:
        raw = apply_local(state, a, None)
    else:
        raw = apply_local(state, None, a)
    out, weight = normalize(raw)
    return HeraldedState(out, weight)


def ideal_displaced_subtract_two(state: State, disp: DisplacementPair = DisplacementPair()) -> HeraldedState:
    """Apply ``(a + alpha) x (b + beta)`` and renormalize.

    With zero displacement this is plain two-photon subtraction ``a x b``.
    """
    a, _ = ladder(state.d)
    eye = np.eye(state.d)
    raw = apply_local(state, a + disp.alpha * eye, a + disp.beta * eye)
    out, weight = normalize(raw)
    return HeraldedState(out, weight)


def no_click_operator(alpha: complex, reflectivity: float, d: int) -> np.ndarray:
    """``D(-sqrt(1-R) alpha) (1-R)^{n/2} D(alpha)``, the no-click branch of a displaced tap.

    Evaluated in a padded workspace and cut to the top-left ``d x d`` block.
    """
    if alpha == 0:
        return np.diag(math.sqrt(1.0 - reflectivity) ** np.arange(d))
    t = math.sqrt(1.0 - reflectivity)
    work = spread_dim(alpha, d)
    forward = displacement(alpha, work)
    back = displacement(-t * alpha, work)
    return (back @ np.diag(t ** np.arange(work)) @ forward)[:d, :d]


def _displacement_block(alpha: float, rows: int, cols: int) -> np.ndarray:
    size = max(rows, cols)
    return displacement(alpha, size, workspace_dim(alpha, size))[:rows, :cols]


def _conjugate(t: np.ndarray, op: np.ndarray, mode: Mode) -> np.ndarray:
    if mode is Mode.A:
        return np.einsum("am,mnkl,bk->anbl", op, t, op.conj(), optimize=True)
    return np.einsum("an,mnkl,bl->makb", op, t, op.conj(), optimize=True)


class TapSubtractor:
    """Realistic subtraction on a fixed input state, reusable across displacements.

    On each listed mode the signal is displaced by its amplitude, reflects a
    fraction ``R`` onto a vacuum ancilla, the ancilla is measured with
    ``Pi = 1 - |0><0|`` and the signal is displaced back by ``-sqrt(1-R)``
    times the amplitude.  Because ``Pi`` is the identity minus the vacuum
    projector, the click branch on one mode equals the whole loss channel of
    loss ``R`` (unchanged by the displacement pair) minus the no-click branch
    ``F rho F^dag`` with ``F`` from :func:`no_click_operator`.  The loss-channel
    pieces do not depend on the displacement and are computed once here.

    When the success probability is small this difference cancels badly, so
    below ``DIRECT_SUM_BELOW`` the click branch is recomputed as the sum over
    ``k >= 1`` reflected photons, ``D(-sqrt(1-R) alpha) K_k D(alpha)``, in a
    padded workspace.
    """

    def __init__(self, state: State, reflectivity: float,
                 modes: Iterable[Union[Mode, str]] = (Mode.A, Mode.B)):
        SubtractionModel.tap(reflectivity)
        rho = state.to_density() if isinstance(state, PureState) else state
        self.d = rho.d
        self.reflectivity = float(reflectivity)
        self.modes = tuple(dict.fromkeys(Mode.coerce(m) for m in modes))
        self._rho = np.array(rho.tensor)
        # inclusion-exclusion over which heralded modes take the no-click branch
        self._terms = []
        for mask in itertools.product((False, True), repeat=len(self.modes)):
            lossy = [m for m, miss in zip(self.modes, mask) if not miss]
            missed = [m for m, miss in zip(self.modes, mask) if miss]
            t = self._rho
            for m in lossy:
                t = _loss_on_axis(t, self.reflectivity, *((0, 2) if m is Mode.A else (1, 3)))
            self._terms.append(((-1) ** len(missed), missed, t))

    def __call__(self, disp: DisplacementPair = DisplacementPair(), validate: bool = True) -> HeraldedState:
        d = self.d
        amps = {Mode.A: disp.alpha, Mode.B: disp.beta}
        ops = {m: no_click_operator(amps[m], self.reflectivity, d) for m in self.modes}
        total = None
        for sign, missed, t in self._terms:
            for m in missed:
                t = _conjugate(t, ops[m], m)
            total = sign * t if total is None else total + sign * t
        mat = total.reshape(d * d, d * d)
        p = float(np.trace(mat).real)
        if p < DIRECT_SUM_BELOW:
            mat = self.direct(disp).reshape(d * d, d * d)
            p = float(np.trace(mat).real)
        mat = 0.5 * (mat + mat.conj().T)
        if not p >= HERALD_FLOOR:
            raise HeraldError(f"herald never fires (success probability {p:.3g})")
        return HeraldedState(DensityOperator(d, mat / p, validate=validate), p)

    def direct(self, disp: DisplacementPair = DisplacementPair()) -> np.ndarray:
        """Unnormalized click branch as a ``(d, d, d, d)`` tensor, free of cancellation."""
        d = self.d
        amps = {Mode.A: disp.alpha, Mode.B: disp.beta}
        t = self._rho
        for m in self.modes:
            axes = (0, 2) if m is Mode.A else (1, 3)
            alpha = amps[m]
            if alpha == 0:
                t = _loss_on_axis(t, self.reflectivity, *axes, first_branch=1)
                continue
            work = spread_dim(alpha, d)
            t = _conjugate(t, _displacement_block(alpha, work, d), m)
            t = _loss_on_axis(t, self.reflectivity, *axes, first_branch=1)
            back = -math.sqrt(1.0 - self.reflectivity) * alpha
            t = _conjugate(t, _displacement_block(back, d, work), m)
        return t


def tap_subtract(state: State, disp: DisplacementPair, reflectivity: float,
                 modes: Iterable[Union[Mode, str]] = (Mode.A, Mode.B),
                 validate: bool = True) -> HeraldedState:
    """Realistic photon subtraction with tap beam splitters and on/off detectors.

    All listed modes are heralded jointly; the returned weight is the
    coincidence (success) probability.  See :class:`TapSubtractor`.

    Raises
    ------
    HeraldError
        If the success probability is below ``1e-15``.
    """
    return TapSubtractor(state, reflectivity, modes)(disp, validate=validate)
