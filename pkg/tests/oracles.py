"""Slow, independent reference computations used as test oracles.

Nothing here imports the package; each routine follows its defining sum
directly so that agreement with the fast code is meaningful.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate


def naive_dft(x, size):
    x = np.concatenate([np.asarray(x, dtype=complex), np.zeros(size - len(x))])
    n = np.arange(size)
    return np.array([np.sum(x * np.exp(-2j * np.pi * m * n / size)) for m in range(size)])


def naive_convolve(x, f):
    out = np.zeros(len(x) + len(f) - 1, dtype=complex)
    for i, xi in enumerate(x):
        for j, fj in enumerate(f):
            out[i + j] += xi * fj
    return out


def naive_autocorrelation(f):
    f = list(f)
    N = len(f)
    return np.array([sum(f[n + m] * f[m] for m in range(N - n)) for n in range(N)])


def expected_spectrum_by_summation(omega_c_full, M, omega):
    """(1/M) sum_k |sum_{n<M} exp(j (w_k - w) n)|^2, summed term by term."""
    n = np.arange(M)
    total = 0.0
    for wk in omega_c_full:
        total += abs(np.sum(np.exp(1j * (wk - omega) * n))) ** 2
    return total / M


def filtered_block_energy(f, omega_c_full, M):
    """E sum_n |y_n|^2 for y = f * x, x_n = sum_k A_k/sqrt(M) e^{j w_k n}, E|A_k|^2 = 1."""
    energy = 0.0
    for wk in omega_c_full:
        x = np.exp(1j * wk * np.arange(M)) / np.sqrt(M)
        energy += np.sum(np.abs(naive_convolve(x, f)) ** 2)
    return energy


def power_inner_product_unshifted(J, M, f, s):
    """sum_{|n|<N} b_{J,n} g'_n with the unshifted carriers J and f modulated by s.

    f'_m = f_m e^{2 pi j s m / M}, g'_n = sum_m f'_{m+n} conj(f'_m) and
    b_{J,n} = sum_{k in J} (M - |n|) e^{-2 pi j k n / M}.
    """
    N = len(f)
    fm = np.asarray(f, dtype=complex) * np.exp(2j * np.pi * s * np.arange(N) / M)
    total = 0.0
    for n in range(-(N - 1), N):
        gn = sum(fm[m + n] * np.conj(fm[m]) for m in range(N) if 0 <= m + n < N)
        bn = sum((M - abs(n)) * np.exp(-2j * np.pi * k * n / M) for k in J)
        total += bn * gn
    return total


def q_function_quadrature(x):
    val, _ = integrate.quad(lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi), x, np.inf,
                            epsabs=1e-15, epsrel=1e-12)
    return val


def qpsk_ber(eb_n0_db):
    from scipy.special import erfc
    ebn0 = 10 ** (np.asarray(eb_n0_db) / 10)
    return 0.5 * erfc(np.sqrt(ebn0))


def vertex_enumeration(c, A_ub, b_ub, lower=None):
    """Minimum of c.x over the polyhedron {A_ub x <= b_ub, x >= lower} by trying every basis.

    Returns (objective, x) or (None, None) if no vertex is feasible. Only valid
    for bounded problems, which the callers construct.
    """
    c = np.asarray(c, float)
    A = np.asarray(A_ub, float)
    b = np.asarray(b_ub, float)
    n = c.size
    if lower is not None:
        lower = np.asarray(lower, float)
        idx = np.flatnonzero(np.isfinite(lower))
        B = np.zeros((idx.size, n))
        B[np.arange(idx.size), idx] = -1.0
        A = np.vstack([A, B])
        b = np.concatenate([b, -lower[idx]])
    best, best_x = None, None
    for rows in itertools.combinations(range(A.shape[0]), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            val = float(c @ x)
            if best is None or val < best:
                best, best_x = val, x
    return best, best_x


def empirical_ccdf(samples_db, thresholds):
    """Fraction of samples strictly above each threshold, one threshold at a time."""
    samples = np.asarray(samples_db)
    return np.array([np.count_nonzero(samples > t) / samples.size
                     for t in np.atleast_1d(thresholds)])
