"""Baseline filters: Dolph-Chebyshev and the identity (plain OFDM)."""
from __future__ import annotations

import numpy as np

from .design import DesignSpec, power_vector, shift_carriers
from .errors import ParameterError
from .spectral import FirFilter, autocorrelation


def _chebyshev_poly(order: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 1
    small = x < -1
    mid = ~(big | small)
    out[big] = np.cosh(order * np.arccosh(x[big]))
    out[small] = (-1) ** order * np.cosh(order * np.arccosh(-x[small]))
    out[mid] = np.cos(order * np.arccos(x[mid]))
    return out


def chebyshev_mainlobe_edge(N: int, attenuation_db: float) -> float:
    """Frequency where the window response first reaches the side-lobe level."""
    beta = np.cosh(np.arccosh(10 ** (attenuation_db / 20.0)) / (N - 1))
    return float(2 * np.arccos(1.0 / beta))


def dolph_chebyshev(N: int, attenuation_db: float, spec: DesignSpec | None = None) -> FirFilter:
    """Equiripple window of ``N`` taps with side lobes ``attenuation_db`` below the peak.

    The response T_{N-1}(beta cos(w/2)) is sampled at N frequencies and inverted
    by a direct length-N transform. With ``spec`` the taps are scaled to meet
    that design's power-conservation equality; otherwise the peak tap is 1.
    """
    if N < 2:
        raise ParameterError("Dolph-Chebyshev filter needs N >= 2")
    if not attenuation_db > 0:
        raise ParameterError("attenuation must be positive")
    order = N - 1
    beta = np.cosh(np.arccosh(10 ** (attenuation_db / 20.0)) / order)
    k = np.arange(N)
    p = _chebyshev_poly(order, beta * np.cos(np.pi * k / N)).astype(complex)
    if N % 2 == 0:
        # Half-sample delay makes the sampled response that of an even-length window.
        p = p * np.exp(1j * np.pi * k / N)
    dft_matrix = np.exp(-2j * np.pi * np.outer(k, k) / N)
    w = np.real(dft_matrix @ p)
    if N % 2:
        half = (N + 1) // 2
        w = np.concatenate((w[half - 1:0:-1], w[:half]))
    else:
        half = N // 2 + 1
        w = np.concatenate((w[half - 1:0:-1], w[1:half]))
    w = 0.5 * (w + w[::-1])
    w = w / w.max()
    filt = FirFilter(w, "dolph_chebyshev", {"attenuation_db": float(attenuation_db)})
    return normalize_power(filt, spec) if spec is not None else filt


def identity_filter(spec: DesignSpec | None = None) -> FirFilter:
    """``f = [1]``; the UF-OFDM chain then reduces to plain OFDM."""
    f = FirFilter([1.0], "identity")
    if spec is not None:
        f.M, f.carriers = spec.M, spec.carriers
    return f


def normalize_power(f: FirFilter, spec: DesignSpec) -> FirFilter:
    """Scale ``f`` so that ``b_c @ g == K(M+N-1)`` for a design with ``f``'s length."""
    ctx = DesignSpec(M=spec.M, N=f.N, carriers=spec.carriers, lam=spec.lam,
                     stopband_start=spec.stopband_start)
    b = power_vector(ctx, shift_carriers(ctx))
    power = b @ autocorrelation(f).g
    if power <= 0:
        raise ParameterError("filter carries no power in the carrier band")
    out = f.scaled(np.sqrt(ctx.power_target / power))
    out.M, out.carriers = spec.M, spec.carriers
    return out
