"""Entanglement and characterization measures for two-mode states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError
from .fockcore import (
    DensityOperator,
    Mode,
    PureState,
    State,
    embed,
    ladder,
    partial_trace,
    partial_transpose,
    same_dim,
    trace_norm,
)

LN_FLOOR = 1e-9
# rounding allowance so that states on the boundary (vacuum) are not called entangled
DUAN_SIMON_TOL = 1e-12
TOP_POPULATION_TOL = 1e-6


def schmidt_coefficients(state: PureState) -> np.ndarray:
    """Singular values of the amplitude matrix ``C[m, n]``, descending."""
    return np.linalg.svd(state.matrix, compute_uv=False)


def log_negativity(state: State) -> float:
    """Logarithmic negativity ``log2 || rho^{T_A} ||_1``.

    Mixed states go through the partial transpose and a Hermitian
    eigen-solve.  Pure states use ``2 log2(sum of Schmidt coefficients)``,
    which is the same quantity.  Values below ``1e-9`` are reported as 0.
    """
    if isinstance(state, PureState):
        s = schmidt_coefficients(state)
        norm = float(np.sum(s * s))
        value = 2.0 * math.log2(float(np.sum(s)) / math.sqrt(norm))
    else:
        tn = trace_norm(partial_transpose(state, Mode.A))
        value = math.log2(tn / state.trace())
    return value if value >= LN_FLOOR else 0.0


@dataclass(frozen=True)
class VarianceTriple:
    """Central variances of ``x_A - x_B`` and ``p_A + p_B``; vacuum gives ``(1, 1, 2)``."""

    var_x_minus: float
    var_p_plus: float

    @property
    def total(self) -> float:
        return self.var_x_minus + self.var_p_plus


def _top_populations(state: State) -> float:
    if isinstance(state, PureState):
        p = np.abs(state.matrix) ** 2
        pa, pb = p.sum(axis=1), p.sum(axis=0)
    else:
        pa = np.real(np.diag(partial_trace(state, "A")))
        pb = np.real(np.diag(partial_trace(state, "B")))
    norm = float(pa.sum())
    return float(max(pa[-2:].sum(), pb[-2:].sum()) / norm)


def _expect(state: State, op: np.ndarray) -> complex:
    if isinstance(state, PureState):
        psi = state.amplitudes
        return complex(np.vdot(psi, op @ psi)) / state.norm2()
    return complex(np.sum(state.matrix.T * op)) / state.trace()


def quadrature_variances(state: State) -> VarianceTriple:
    """Two-mode squeezing variances with means subtracted.

    Uses ``x = (a^dag + a)/sqrt2`` and ``p = i(a^dag - a)/sqrt2`` on the
    truncated space.

    Raises
    ------
    TruncationError
        If either mode has population ``>= 1e-6`` on its top two levels,
        where truncated quadrature moments are unreliable.
    """
    top = _top_populations(state)
    if top >= TOP_POPULATION_TOL:
        raise TruncationError(
            f"population {top:.3g} on the top two Fock levels at d={state.d}; "
            f"quadrature moments need a larger cutoff"
        )
    a, adag = ladder(state.d)
    x = (adag + a) / math.sqrt(2.0)
    p = 1j * (adag - a) / math.sqrt(2.0)
    x_minus = embed(x, Mode.A) - embed(x, Mode.B)
    p_plus = embed(p, Mode.A) + embed(p, Mode.B)

    def central(op):
        mean = _expect(state, op).real
        return _expect(state, op @ op).real - mean * mean

    return VarianceTriple(central(x_minus), central(p_plus))


def duan_simon_entangled(state: State) -> tuple[float, bool]:
    """Return ``(2 - total variance, margin > 0)``.

    The verdict requires the margin to exceed rounding noise (``1e-12``) and
    is a sufficient entanglement witness only for Gaussian states.
    """
    margin = 2.0 - quadrature_variances(state).total
    return margin, margin > DUAN_SIMON_TOL


def fock_populations(state: State) -> list[tuple[tuple[int, int], float]]:
    """Diagonal weights ``<m, n|rho|m, n>`` sorted by weight, largest first."""
    d = state.d
    if isinstance(state, PureState):
        w = (np.abs(state.amplitudes) ** 2) / state.norm2()
    else:
        w = np.real(np.diag(state.matrix)) / state.trace()
    order = sorted(range(d * d), key=lambda i: (-w[i], i))
    return [((i // d, i % d), float(w[i])) for i in order]


def eigen_populations(state: State, count: int | None = None) -> list[tuple[tuple[int, int], float]]:
    """Eigenvalues of ``rho`` paired with the Fock label of each eigenvector's largest component.

    An alternative reading of "weights of eigenstates" to :func:`fock_populations`.
    """
    rho = state.to_density() if isinstance(state, PureState) else state
    lam, vecs = np.linalg.eigh(rho.matrix / rho.trace())
    order = np.argsort(-lam, kind="stable")
    if count is not None:
        order = order[:count]
    d = rho.d
    out = []
    for i in order:
        j = int(np.argmax(np.abs(vecs[:, i])))
        out.append(((j // d, j % d), float(lam[i])))
    return out


def fidelity(a: State, b: State) -> float:
    """Overlap fidelity; at least one argument must be pure.

    ``|<a|b>|^2`` for two pure states, ``<psi|rho|psi>`` for a mixed and a pure one.
    """
    same_dim(a, b)
    if isinstance(a, PureState) and isinstance(b, PureState):
        ov = np.vdot(a.amplitudes, b.amplitudes)
        return float(abs(ov) ** 2 / (a.norm2() * b.norm2()))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        raise TypeError("fidelity between two mixed states is not supported")
    rho, psi = (a, b) if isinstance(a, DensityOperator) else (b, a)
    v = psi.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real / (psi.norm2() * rho.trace()))
