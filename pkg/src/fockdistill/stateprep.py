"""Initial entangled resources.

* ``ONE_MSV``: a single-mode squeezed vacuum split on a balanced beam splitter.
* ``TWO_MSV``: the two-mode squeezed vacuum ``sqrt(1-g^2) sum g^n |n, n>``.

Both are parameterized by the total mean photon number over the two modes.
The beam splitter convention is ``a^dag -> (a^dag + b^dag)/sqrt2``,
``b^dag -> (a^dag - b^dag)/sqrt2``, which gives the split state with all
coefficients positive.  Any other convention differs by local phases only.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, InvalidStateError, TruncationError
from .fockcore import DensityOperator, PureState, State, check_dim, partial_trace

SMSV_TAIL_TOL = 1e-10
SOURCE_TAIL_TOL = 1e-6
SOURCE_MEAN_TOL = 1e-6


class SourceKind(enum.Enum):
    ONE_MSV = "1msv"
    TWO_MSV = "2msv"

    @classmethod
    def coerce(cls, value) -> "SourceKind":
        if isinstance(value, SourceKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown source {value!r}; expected '1msv' or '2msv'") from None


def gamma_from_nbar(kind: SourceKind, nbar: float) -> float:
    """Invert ``nbar = g^2/(1-g^2)`` (1MSV) or ``nbar = 2 g^2/(1-g^2)`` (2MSV)."""
    kind = SourceKind.coerce(kind)
    if not nbar >= 0 or not math.isfinite(nbar):
        raise ConfigError(f"mean photon number must be finite and >= 0, got {nbar!r}")
    if kind is SourceKind.ONE_MSV:
        return math.sqrt(nbar / (1.0 + nbar))
    return math.sqrt(nbar / (2.0 + nbar))


def nbar_from_gamma(kind: SourceKind, gamma: float) -> float:
    kind = SourceKind.coerce(kind)
    _check_gamma(gamma)
    g2 = gamma * gamma
    return (1.0 if kind is SourceKind.ONE_MSV else 2.0) * g2 / (1.0 - g2)


def squeezing_db(gamma: float) -> float:
    """Quadrature noise reduction ``-10 log10(exp(-2 s))`` for ``gamma = tanh(s)``."""
    _check_gamma(gamma)
    return 20.0 * math.atanh(gamma) / math.log(10.0)


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma < 1.0:
        raise ConfigError(f"squeezing parameter gamma must lie in [0, 1), got {gamma!r}")


def _smsv_even_amplitudes(gamma: float, count: int) -> np.ndarray:
    """Unnormalized-by-truncation amplitudes on ``|0>, |2>, ..., |2(count-1)>``."""
    n = np.arange(count)
    if gamma == 0.0:
        out = np.zeros(count)
        out[0] = 1.0
        return out
    log_c = (0.25 * math.log1p(-gamma * gamma) + 0.5 * gammaln(2 * n + 1)
             - gammaln(n + 1) + n * math.log(gamma / 2.0))
    return np.exp(log_c)


def smsv_coefficients(gamma: float, d: int) -> np.ndarray:
    """Single-mode squeezed vacuum amplitudes on ``|0> .. |d-1>``.

    ``c_{2n} = (1-g^2)^{1/4} sqrt((2n)!)/n! (g/2)^n``, odd entries zero, evaluated
    through log-factorials and renormalized after truncation.

    Raises
    ------
    TruncationError
        If more than ``1e-10`` of the norm lies beyond the cutoff.
    """
    d = check_dim(d)
    _check_gamma(gamma)
    even = _smsv_even_amplitudes(gamma, (d + 1) // 2)
    out = np.zeros(d)
    out[0::2] = even
    kept = float(np.sum(out ** 2))
    tail = 1.0 - kept
    if tail > SMSV_TAIL_TOL:
        raise TruncationError(
            f"squeezed vacuum with gamma={gamma:.6g} leaves weight {tail:.3g} beyond d={d}; "
            f"increase the cutoff"
        )
    return out / math.sqrt(kept)


def _split_amplitudes(total: int) -> np.ndarray:
    """Output amplitudes of ``|N, 0>`` on ``|k, N-k>``: ``sqrt(C(N, k)) / 2^(N/2)``."""
    k = np.arange(total + 1)
    return np.exp(0.5 * (gammaln(total + 1) - gammaln(k + 1) - gammaln(total - k + 1))
                  - 0.5 * total * math.log(2.0))


def balanced_beam_splitter(d: int) -> np.ndarray:
    """50:50 beam splitter on the two-mode space.

    Column ``|m, n>`` holds the expansion of
    ``(a^dag + b^dag)^m (a^dag - b^dag)^n |0,0> / (2^{(m+n)/2} sqrt(m! n!))``.
    Photon number is conserved, so the matrix is exactly unitary on the
    sectors with total photon number below ``d``; components pushed beyond the
    cutoff are dropped.
    """
    d = check_dim(d)
    u = np.zeros((d * d, d * d))
    lf = gammaln(np.arange(2 * d + 1) + 1)
    for m in range(d):
        for n in range(d):
            total = m + n
            col = np.zeros(total + 1)
            for i in range(m + 1):
                for j in range(n + 1):
                    col[i + j] += math.comb(m, i) * math.comb(n, j) * (-1) ** (n - j)
            k = np.arange(total + 1)
            col *= np.exp(0.5 * (lf[k] + lf[total - k] - lf[m] - lf[n]) - 0.5 * total * math.log(2.0))
            for p in range(max(0, total - d + 1), min(total, d - 1) + 1):
                u[p * d + (total - p), m * d + n] = col[p]
    return u.astype(complex)


def prepare_source(kind: SourceKind, nbar: float, d: int,
                   tail_tol: float = SOURCE_TAIL_TOL, mean_tol: float = SOURCE_MEAN_TOL) -> PureState:
    """Normalized initial two-mode state with total mean photon number ``nbar``.

    The 1MSV amplitudes are obtained by splitting every ``|2n, 0>`` analytically,
    including photon numbers up to ``2d - 2`` whose split components can
    still land inside the two-mode cutoff.

    Raises
    ------
    TruncationError
        If more than ``tail_tol`` of the norm falls outside ``m, n < d``, or
        the truncated state's mean photon number misses ``nbar`` by more
        than ``mean_tol``.
    """
    kind = SourceKind.coerce(kind)
    d = check_dim(d)
    gamma = gamma_from_nbar(kind, nbar)
    _check_gamma(gamma)
    amps = np.zeros((d, d))
    if kind is SourceKind.ONE_MSV:
        even = _smsv_even_amplitudes(gamma, d)
        for half, c in enumerate(even):
            total = 2 * half
            split = _split_amplitudes(total)
            for p in range(max(0, total - d + 1), min(total, d - 1) + 1):
                amps[p, total - p] = c * split[p]
    else:
        n = np.arange(d)
        amps[n, n] = math.sqrt(1.0 - gamma * gamma) * gamma ** n
    kept = float(np.sum(amps ** 2))
    tail = 1.0 - kept
    if tail > tail_tol:
        raise TruncationError(
            f"{kind.value} source at nbar={nbar:.6g} leaves weight {tail:.3g} beyond d={d}; "
            f"increase the cutoff"
        )
    p = amps ** 2 / kept
    levels = np.arange(d)
    drift = float(levels @ p.sum(axis=1) + levels @ p.sum(axis=0)) - nbar
    if abs(drift) > mean_tol:
        raise TruncationError(
            f"{kind.value} source at nbar={nbar:.6g} truncated to d={d} has mean photon number "
            f"off by {drift:.3g}; increase the cutoff"
        )
    return PureState(d, amps / math.sqrt(kept))


def mode_photon_numbers(state: State) -> tuple[float, float]:
    """``(<n_A>, <n_B>)`` of a normalized state."""
    if isinstance(state, PureState):
        if not state.normalized or abs(state.norm2() - 1.0) > 1e-10:
            raise InvalidStateError("mean photon number needs a normalized state")
        p = np.abs(state.matrix) ** 2
        pa, pb = p.sum(axis=1), p.sum(axis=0)
    else:
        if not state.normalized or abs(state.trace() - 1.0) > 1e-10:
            raise InvalidStateError("mean photon number needs a normalized state")
        pa = np.real(np.diag(partial_trace(state, "A")))
        pb = np.real(np.diag(partial_trace(state, "B")))
    levels = np.arange(state.d)
    return float(levels @ pa), float(levels @ pb)


def mean_photon(state: State) -> float:
    """Total mean photon number ``<n_A> + <n_B>``."""
    na, nb = mode_photon_numbers(state)
    return na + nb


def vacuum(d: int) -> PureState:
    return PureState.from_components(d, {(0, 0): 1.0})


def to_density(state: State) -> DensityOperator:
    return state.to_density() if isinstance(state, PureState) else state
