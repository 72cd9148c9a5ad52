"""Independent reference implementations used only by the tests.

Everything here is written from textbook formulas with explicit loops,
Laguerre-polynomial matrix elements and explicit beam-splitter dilations, so
that it shares no code path with the package.
"""

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln


def ladder_loop(d):
    a = np.zeros((d, d))
    for n in range(1, d):
        a[n - 1, n] = math.sqrt(n)
    return a


def displacement_laguerre(alpha, d):
    """Exact ``<m|D(alpha)|n>`` for ``m, n < d``; no truncation error."""
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    out = np.zeros((d, d), dtype=complex)
    for m in range(d):
        for n in range(d):
            if m >= n:
                pref = math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
                out[m, n] = pref * alpha ** (m - n) * eval_genlaguerre(n, m - n, x)
            else:
                pref = math.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
                out[m, n] = pref * (-alpha.conjugate()) ** (n - m) * eval_genlaguerre(m, n - m, x)
    return out * math.exp(-x / 2)


def beam_splitter(d_signal, d_ancilla, reflectivity):
    """``exp(theta (a^dag c - a c^dag))`` with ``sin(theta)^2 = R`` on signal x ancilla.

    It maps ``a^dag -> cos(theta) a^dag - sin(theta) c^dag``.  Photon number is
    conserved, so the truncated generator is exact on every sector whose total
    photon number is below ``min(d_signal, d_ancilla)``.
    """
    theta = math.asin(math.sqrt(reflectivity))
    a = np.kron(ladder_loop(d_signal), np.eye(d_ancilla))
    c = np.kron(np.eye(d_signal), ladder_loop(d_ancilla))
    return expm(theta * (a.T @ c - a @ c.T))


def dilation_kraus(reflectivity, d_signal, d_ancilla):
    """Signal operators ``<k|_c U |0>_c`` for ``k = 0 .. d_ancilla-1``."""
    u = beam_splitter(d_signal, d_ancilla, reflectivity).reshape(d_signal, d_ancilla, d_signal, d_ancilla)
    return [u[:, k, :, 0] for k in range(d_ancilla)]


def apply_kraus_two_mode(rho, d, ops_a=None, ops_b=None):
    """``sum_jk (A_j x B_k) rho (A_j x B_k)^dag`` with explicit Kronecker products."""
    ops_a = ops_a if ops_a is not None else [np.eye(d)]
    ops_b = ops_b if ops_b is not None else [np.eye(d)]
    out = np.zeros((d * d, d * d), dtype=complex)
    for ka in ops_a:
        for kb in ops_b:
            k = np.kron(ka, kb)
            out += k @ rho @ k.conj().T
    return out


def partial_transpose_loop(rho, d):
    out = np.zeros_like(rho)
    for m in range(d):
        for n in range(d):
            for mp in range(d):
                for np_ in range(d):
                    out[m * d + n, mp * d + np_] = rho[mp * d + n, m * d + np_]
    return out


def ln_mixed_oracle(rho, d):
    """``log2`` of the sum of singular values of the partial transpose."""
    s = np.linalg.svd(partial_transpose_loop(np.asarray(rho, dtype=complex), d), compute_uv=False)
    return math.log2(float(np.sum(s)) / float(np.trace(rho).real))


def ln_pure_oracle(amps, d):
    """Schmidt-sum LN from the eigenvalues of the reduced density matrix of mode A."""
    c = np.asarray(amps, dtype=complex).reshape(d, d)
    c = c / np.linalg.norm(c)
    lam = np.clip(np.linalg.eigvalsh(c @ c.conj().T), 0.0, None)
    return 2.0 * math.log2(float(np.sum(np.sqrt(lam))))


def tap_click_ops_signal_frame(alpha, reflectivity, d, pad=14):
    """Click Kraus operators of the displace / tap / displace-back circuit.

    ``O_k = D(-sqrt(1-R) alpha) <k|_c U |0>_c D(alpha)`` for ``k >= 1``, built with
    an explicit ancilla in a padded workspace and cut to ``d x d``.
    """
    work = d + pad
    t = math.sqrt(1.0 - reflectivity)
    fwd = displacement_laguerre(alpha, work)
    back = displacement_laguerre(-t * alpha, work)
    kraus = dilation_kraus(reflectivity, work, work)
    return [(back @ k @ fwd)[:d, :d] for k in kraus[1:]]


def tap_click_ops_detector_frame(alpha, reflectivity, d, pad=14):
    """Same instrument with the displacement moved to the detection arm.

    Commuting ``D(alpha)`` through the beam splitter leaves the signal
    undisplaced and displaces the reflected mode by ``-sqrt(R) alpha``:
    ``M_k = sum_j <k|D(-sqrt(R) alpha)|j> <j|_c U |0>_c``, summed over ``k >= 1``.
    """
    work = d + pad
    r = math.sqrt(reflectivity)
    kraus = dilation_kraus(reflectivity, d, d)
    dc = displacement_laguerre(-r * alpha, work)
    ops = []
    for k in range(1, work):
        ops.append(sum(dc[k, j] * kraus[j] for j in range(d)))
    return ops


def tap_oracle(rho, d, reflectivity, alpha=0.0, beta=0.0, modes="AB", frame="signal"):
    build = tap_click_ops_signal_frame if frame == "signal" else tap_click_ops_detector_frame
    ops_a = build(alpha, reflectivity, d) if "A" in modes else None
    ops_b = build(beta, reflectivity, d) if "B" in modes else None
    out = apply_kraus_two_mode(rho, d, ops_a, ops_b)
    p = float(np.trace(out).real)
    return out / p, p


def random_density(rng, d, rank=None, support=None):
    """Random two-mode density matrix, optionally with photon numbers below ``support``."""
    n = d * d
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    if support is not None:
        mask = np.array([(i // d) < support and (i % d) < support for i in range(n)])
        g[~mask] = 0.0
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, d, support=None):
    c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if support is not None:
        c[support:, :] = 0.0
        c[:, support:] = 0.0
    return c / np.linalg.norm(c)
