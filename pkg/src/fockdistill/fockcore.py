"""Dense linear algebra on truncated one- and two-mode Fock spaces.

Every two-mode object uses the basis ordering ``|m>_A |n>_B -> m * d + n``
with the same per-mode cutoff ``d`` (levels ``0 .. d-1``) on both modes.
A ``ModeMatrix`` is a plain ``(d, d)`` array indexed ``<m|op|n>``; arrays whose
entries are all real are kept in real dtype.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import expm

from .errors import AnnihilatedStateError, DimensionError, InvalidStateError, TruncationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NEGATIVITY_TOL = 1e-9
# eigenvalues below this in magnitude are treated as rounding noise
EIG_ZERO_TOL = 1e-12
WEIGHT_FLOOR = 1e-300


class NegativeEigenvalueWarning(UserWarning):
    """A density matrix has a tiny negative eigenvalue (rounding noise)."""


class Mode(enum.Enum):
    A = "A"
    B = "B"

    @classmethod
    def coerce(cls, value: Union["Mode", str]) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"mode must be 'A' or 'B', got {value!r}") from None


def check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise DimensionError(f"Fock cutoff must be an integer >= 2, got {d!r}")
    return int(d)


def ladder(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices on ``|0> .. |d-1>``.

    Returns
    -------
    a, adag : ndarray
        ``<n-1|a|n> = sqrt(n)``; ``adag`` is the conjugate transpose.
    """
    d = check_dim(d)
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)
    return a, a.T.copy()


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(check_dim(d), dtype=float))


def workspace_dim(alpha: complex, d: int) -> int:
    """Smallest workspace accepted by :func:`displacement` for ``alpha``."""
    return int(d + math.ceil(8 * abs(alpha)) + 8)


def spread_dim(alpha: complex, d: int) -> int:
    """Levels that hold ``D(alpha)|n>`` for every ``n < d`` to round-off.

    The Fock-space width of a displaced number state grows like
    ``|alpha| sqrt(2n+1)``, so products of displacement blocks need this much
    room for their inner index.
    """
    return int(d + math.ceil(abs(alpha) * (8 + 6 * math.sqrt(2 * d + 1))) + 8)


def displacement(alpha: complex, d: int, d_work: int | None = None) -> np.ndarray:
    """Displacement operator ``exp(alpha a^dag - alpha^* a)`` on ``d`` levels.

    The exponential is taken in a ``d_work``-level workspace and the top-left
    ``d x d`` block is returned, so the block agrees with the matrix elements
    of the untruncated operator up to the workspace error.

    Raises
    ------
    TruncationError
        If ``d_work`` is smaller than ``d + ceil(8|alpha|) + 8``.
    """
    d = check_dim(d)
    need = workspace_dim(alpha, d)
    if d_work is None:
        d_work = need
    elif d_work < need:
        raise TruncationError(
            f"displacement workspace {d_work} too small for |alpha|={abs(alpha):.4g} "
            f"at d={d}; need at least {need}"
        )
    a, adag = ladder(d_work)
    gen = alpha * adag - np.conj(alpha) * a
    if complex(alpha).imag == 0.0:
        return expm(gen.real)[:d, :d]
    return expm(gen)[:d, :d]


def embed(op: np.ndarray, mode: Union[Mode, str], d: int | None = None) -> np.ndarray:
    """Lift a single-mode matrix to the two-mode space (``op x I`` or ``I x op``)."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"mode matrix must be square, got shape {op.shape}")
    if d is not None and op.shape[0] != d:
        raise DimensionError(f"mode matrix has dim {op.shape[0]}, target space has {d}")
    eye = np.eye(op.shape[0], dtype=op.dtype)
    if Mode.coerce(mode) is Mode.A:
        return np.kron(op, eye)
    return np.kron(eye, op)


def _readonly(arr: np.ndarray) -> np.ndarray:
    # real-valued data stays real: same numbers, half the memory, faster kernels
    arr = np.array(arr, copy=True)
    arr = arr.astype(complex if np.iscomplexobj(arr) else float, copy=False)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Two-mode amplitude vector, ``amplitudes[m * d + n] = <m, n|psi>``.

    ``normalized=False`` marks a conditional (heralded, not yet rescaled)
    vector whose squared norm carries the heralding weight.
    """

    d: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        check_dim(self.d)
        amps = np.asarray(self.amplitudes)
        if amps.shape == (self.d, self.d):
            amps = amps.reshape(-1)
        if amps.shape != (self.d * self.d,):
            raise DimensionError(f"expected {self.d * self.d} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _readonly(amps))
        if self.normalized and abs(self.norm2() - 1.0) > 1e-12:
            raise InvalidStateError(f"state flagged normalized has squared norm {self.norm2():.15g}")

    @classmethod
    def from_components(cls, d: int, components: dict[tuple[int, int], complex],
                        normalize: bool = True) -> "PureState":
        """Build ``sum c_mn |m, n>`` from a ``{(m, n): c_mn}`` mapping."""
        amps = np.zeros((check_dim(d), d), dtype=complex)
        for (m, n), c in components.items():
            if not (0 <= m < d and 0 <= n < d):
                raise TruncationError(f"component |{m},{n}> outside cutoff d={d}")
            amps[m, n] += c
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(d, amps, normalized=normalize)

    @property
    def matrix(self) -> np.ndarray:
        """Amplitudes as a ``(d, d)`` array ``C[m, n]``."""
        return self.amplitudes.reshape(self.d, self.d)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_density(self, validate: bool = False) -> "DensityOperator":
        psi = self.amplitudes
        return DensityOperator(self.d, np.outer(psi, psi.conj()),
                               normalized=self.normalized, validate=validate)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Two-mode density matrix of shape ``(d*d, d*d)``.

    With ``validate=True`` (the default) Hermiticity, trace and positivity are
    checked on construction.  Eigenvalues in ``(-1e-9, -1e-12)`` only trigger a
    :class:`NegativeEigenvalueWarning`; anything below ``-1e-9`` is an error.
    """

    d: int
    matrix: np.ndarray
    normalized: bool = True
    validate: bool = True

    def __post_init__(self):
        check_dim(self.d)
        mat = np.asarray(self.matrix)
        n = self.d * self.d
        if mat.shape != (n, n):
            raise DimensionError(f"expected ({n}, {n}) density matrix, got shape {mat.shape}")
        object.__setattr__(self, "matrix", _readonly(mat))
        if self.validate:
            self.check()

    def check(self) -> None:
        mat = self.matrix
        if not np.all(np.isfinite(mat)):
            raise InvalidStateError("density matrix has non-finite entries")
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"density matrix not Hermitian (max |rho - rho^dag| = {herm:.3g})")
        if self.normalized and abs(self.trace() - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"normalized density matrix has trace {self.trace():.15g}")
        lam_min = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0])
        scale = self.trace() if not self.normalized else 1.0
        if lam_min < -NEGATIVITY_TOL * max(scale, 1e-300):
            raise InvalidStateError(f"density matrix has eigenvalue {lam_min:.3g} < -1e-9")
        if lam_min < -EIG_ZERO_TOL * max(scale, 1e-300):
            warnings.warn(f"density matrix has small negative eigenvalue {lam_min:.3g}",
                          NegativeEigenvalueWarning, stacklevel=3)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def tensor(self) -> np.ndarray:
        """View as ``rho[m, n, m', n']``."""
        d = self.d
        return self.matrix.reshape(d, d, d, d)


State = Union[PureState, DensityOperator]


def as_density(state: State) -> DensityOperator:
    if isinstance(state, PureState):
        return state.to_density()
    return state


def same_dim(*objs) -> int:
    dims = {o.d for o in objs}
    if len(dims) != 1:
        raise DimensionError(f"objects built at different cutoffs: {sorted(dims)}")
    return dims.pop()


def partial_transpose(rho: State, mode: Union[Mode, str] = Mode.A) -> np.ndarray:
    """Partial transpose on one mode.

    ``<m, n|rho^{T_A}|m', n'> = <m', n|rho|m, n'>``.  Built by pure index
    permutation, so trace and Hermiticity are preserved exactly.
    """
    rho = as_density(rho)
    t = rho.tensor
    if Mode.coerce(mode) is Mode.A:
        out = t.transpose(2, 1, 0, 3)
    else:
        out = t.transpose(0, 3, 2, 1)
    n = rho.d * rho.d
    return np.ascontiguousarray(out).reshape(n, n)


def partial_trace(rho: State, keep: Union[Mode, str]) -> np.ndarray:
    """Reduced ``(d, d)`` density matrix of the kept mode."""
    rho = as_density(rho)
    if Mode.coerce(keep) is Mode.A:
        return np.einsum("mjnj->mn", rho.tensor)
    return np.einsum("jmjn->mn", rho.tensor)


def trace_norm(h: np.ndarray, herm_tol: float = 1e-8) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix.

    Real symmetric input (imaginary part exactly zero) goes through the real
    eigen-solver.  Eigenvalues with ``|lambda| < 1e-12`` are dropped.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"trace norm needs a square matrix, got shape {h.shape}")
    dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if dev > herm_tol:
        raise InvalidStateError(f"matrix not Hermitian within {herm_tol:g} (deviation {dev:.3g})")
    if np.iscomplexobj(h) and not np.any(h.imag):
        h = h.real
    lam = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    lam = lam[np.abs(lam) >= EIG_ZERO_TOL]
    return float(np.sum(np.abs(lam)))


def normalize(obj: State) -> tuple[State, float]:
    """Rescale to unit norm (pure) or unit trace (mixed).

    Returns the normalized object together with the removed weight: the
    squared norm of a pure vector or the trace of a density matrix.
    """
    if isinstance(obj, PureState):
        weight = obj.norm2()
        if not weight > WEIGHT_FLOOR:
            raise AnnihilatedStateError("state annihilated (squared norm below 1e-300)")
        return PureState(obj.d, obj.amplitudes / math.sqrt(weight)), weight
    weight = obj.trace()
    if not weight > WEIGHT_FLOOR:
        raise AnnihilatedStateError("state annihilated (trace below 1e-300)")
    return DensityOperator(obj.d, obj.matrix / weight, validate=obj.validate), weight


def apply_local(state: State, op_a: np.ndarray | None, op_b: np.ndarray | None,
                validate: bool = False) -> State:
    """Apply ``op_a x op_b`` (``None`` meaning identity) and leave the result unnormalized.

    Pure input maps to ``(op_a x op_b)|psi>``; mixed input maps to
    ``(op_a x op_b) rho (op_a x op_b)^dag``.
    """
    d = state.d
    for op in (op_a, op_b):
        if op is not None and op.shape != (d, d):
            raise DimensionError(f"local operator of shape {op.shape} on a d={d} state")
    if isinstance(state, PureState):
        c = state.matrix
        if op_a is not None:
            c = op_a @ c
        if op_b is not None:
            c = c @ op_b.T
        return PureState(d, c, normalized=False)
    t = state.tensor
    if op_a is not None:
        t = np.einsum("am,mnkl,bk->anbl", op_a, t, op_a.conj(), optimize=True)
    if op_b is not None:
        t = np.einsum("an,mnkl,bl->makb", op_b, t, op_b.conj(), optimize=True)
    return DensityOperator(d, t.reshape(d * d, d * d), normalized=False, validate=validate)
