"""Transforms, polynomial roots and the Gaussian tail function.

Sign convention used everywhere in the package: the forward transform is
X(w) = sum_n x_n exp(-j n w), so ``dft`` returns X at w = 2 pi m / size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import ParameterError

__all__ = ["Polynomial", "dft", "idft", "poly_roots", "q_function", "is_power_of_two"]


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def _bit_reverse_permutation(size: int) -> np.ndarray:
    bits = size.bit_length() - 1
    idx = np.arange(size)
    rev = np.zeros(size, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _prepare(x, size: int) -> np.ndarray:
    if not is_power_of_two(size):
        raise ParameterError(f"transform size must be a power of two, got {size!r}")
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0:
        x = x.reshape(1)
    n = x.shape[-1]
    if n > size:
        raise ParameterError(f"input length {n} exceeds transform size {size}")
    if n < size:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, size - n)]
        x = np.pad(x, pad)
    if not np.all(np.isfinite(x)):
        raise ParameterError("input contains non-finite samples")
    return x


def _radix2(x: np.ndarray, sign: float) -> np.ndarray:
    # Iterative decimation in time over the last axis; leading axes are batched.
    size = x.shape[-1]
    out = x[..., _bit_reverse_permutation(size)]
    span = 2
    while span <= size:
        half = span // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / span)
        blocks = out.reshape(out.shape[:-1] + (size // span, span))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        out = np.concatenate((even + odd, even - odd), axis=-1).reshape(out.shape)
        span *= 2
    return out


def dft(x, size: int) -> np.ndarray:
    """Forward transform of ``x`` (zero padded to ``size``) along the last axis.

    ``size`` must be a power of two. Returns ``X_m = sum_n x_n exp(-2j pi n m / size)``.
    """
    return _radix2(_prepare(x, size), -1.0)


def idft(X, size: int) -> np.ndarray:
    """Inverse of :func:`dft`, including the ``1/size`` normalization."""
    return _radix2(_prepare(X, size), 1.0) / size


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial with coefficients in ascending degree order."""

    coeffs: tuple

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128))
        nz = np.flatnonzero(c)
        if nz.size == 0:
            raise ParameterError("zero polynomial")
        object.__setattr__(self, "coeffs", tuple(c[: nz[-1] + 1]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        acc = np.zeros_like(z)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc


def _newton_ratio(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """p(z) / p'(z) for ascending coefficients ``a``, evaluated stably for any |z|."""
    n = len(a) - 1
    inside = np.abs(z) <= 1.0
    ratio = np.empty_like(z)

    zi = z[inside]
    p = np.zeros_like(zi)
    dp = np.zeros_like(zi)
    for c in a[::-1]:
        dp = dp * zi + p
        p = p * zi + c
    ratio[inside] = p / dp

    # |z| > 1: p(z) = z^n q(1/z) with q the reversed polynomial.
    zo = z[~inside]
    u = 1.0 / zo
    q = np.zeros_like(u)
    dq = np.zeros_like(u)
    for c in a:
        dq = dq * u + q
        q = q * u + c
    ratio[~inside] = zo * q / (n * q - u * dq)
    return ratio


def poly_roots(p, max_iters: int = 500, tol: float = 1e-12) -> np.ndarray:
    """All roots of ``p`` (ascending coefficients or :class:`Polynomial`), with multiplicity.

    Aberth simultaneous iteration from deterministic starting points on a
    circle whose radius is the geometric mean of the root magnitudes.
    """
    poly = p if isinstance(p, Polynomial) else Polynomial(p)
    a = np.array(poly.coeffs)
    if poly.degree < 1:
        raise ParameterError("polynomial degree must be at least 1")

    # Exact zero roots are split off so the starting radius stays meaningful.
    n_zero = int(np.flatnonzero(a)[0])
    a = a[n_zero:]
    n = len(a) - 1
    roots = [np.zeros(n_zero, dtype=np.complex128)]
    if n == 0:
        return roots[0]
    if n == 1:
        return np.concatenate(roots + [np.array([-a[0] / a[1]])])

    radius = (abs(a[0]) / abs(a[-1])) ** (1.0 / n)
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    eye = np.eye(n, dtype=bool)
    for _ in range(max_iters):
        w = _newton_ratio(a, z)
        diff = z[:, None] - z[None, :]
        diff[eye] = 1.0
        inv = 1.0 / diff
        inv[eye] = 0.0
        s = inv.sum(axis=1)
        step = w / (1.0 - w * s)
        step[~np.isfinite(step)] = 0.0
        z = z - step
        if np.max(np.abs(step) / np.maximum(1.0, np.abs(z))) < tol:
            break
    return np.concatenate(roots + [z])


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
