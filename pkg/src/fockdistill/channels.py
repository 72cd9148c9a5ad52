"""Pure-loss (attenuation) channel applied independently to each mode."""

from __future__ import annotations

import numpy as np
from scipy.special import comb

from .errors import ConfigError
from .fockcore import DensityOperator, PureState, State, check_dim


def _check_loss(loss: float) -> float:
    loss = float(loss)
    if not 0.0 <= loss <= 1.0:
        raise ConfigError(f"channel loss must lie in [0, 1], got {loss!r}")
    return loss


def _branch_weights(loss: float, d: int) -> np.ndarray:
    """``w[k, n] = C(n, k) eta^(n-k) loss^k`` for ``k <= n`` (zero otherwise)."""
    n = np.arange(d)[None, :]
    k = np.arange(d)[:, None]
    valid = k <= n
    w = comb(n, k) * (1.0 - loss) ** np.where(valid, n - k, 0) * loss ** k
    return np.where(valid, w, 0.0)


def loss_kraus(loss: float, d: int) -> list[np.ndarray]:
    """Kraus operators of the pure-loss channel.

    ``<n-k|K_k|n> = sqrt(C(n, k) eta^(n-k) loss^k)`` with ``eta = 1 - loss``.
    ``K_k`` removes exactly ``k`` photons.  For ``loss = 0`` only the identity
    is returned; otherwise all ``d`` operators ``K_0 .. K_{d-1}``.
    """
    loss = _check_loss(loss)
    d = check_dim(d)
    if loss == 0.0:
        return [np.eye(d, dtype=complex)]
    w = _branch_weights(loss, d)
    ops = []
    for k in range(d):
        op = np.zeros((d, d), dtype=complex)
        n = np.arange(k, d)
        op[n - k, n] = np.sqrt(w[k, n])
        ops.append(op)
    return ops


def _loss_on_axis(t: np.ndarray, loss: float, ket_axis: int, bra_axis: int,
                  first_branch: int = 0) -> np.ndarray:
    # K_k rho K_k^dag only moves entries (n, n') -> (n-k, n'-k), so the channel is a sum of
    # shifted, elementwise-weighted copies of rho; first_branch=1 keeps only k >= 1
    d = t.shape[ket_axis]
    amp = np.sqrt(_branch_weights(loss, d))
    out = np.zeros_like(t)
    for k in range(first_branch, d):
        src = [slice(None)] * 4
        dst = [slice(None)] * 4
        src[ket_axis] = src[bra_axis] = slice(k, d)
        dst[ket_axis] = dst[bra_axis] = slice(0, d - k)
        shape = [1, 1, 1, 1]
        shape[ket_axis] = d - k
        ket_w = amp[k, k:].reshape(shape)
        shape = [1, 1, 1, 1]
        shape[bra_axis] = d - k
        bra_w = amp[k, k:].reshape(shape)
        out[tuple(dst)] += ket_w * t[tuple(src)] * bra_w
    return out


def apply_loss(rho: State, loss_a: float, loss_b: float | None = None,
               validate: bool = True) -> DensityOperator:
    """Send each mode through its own pure-loss channel.

    Equivalent to ``sum_{j,k} (K_j x K_k) rho (K_j x K_k)^dag``; evaluated mode by
    mode.  ``loss_b`` defaults to ``loss_a``.
    """
    loss_a = _check_loss(loss_a)
    loss_b = loss_a if loss_b is None else _check_loss(loss_b)
    if isinstance(rho, PureState):
        rho = rho.to_density()
    d = rho.d
    t = np.array(rho.tensor)
    if loss_a > 0.0:
        t = _loss_on_axis(t, loss_a, 0, 2)
    if loss_b > 0.0:
        t = _loss_on_axis(t, loss_b, 1, 3)
    return DensityOperator(d, t.reshape(d * d, d * d), normalized=rho.normalized, validate=validate)
