"""Zero-padded UF-OFDM transmitter, multipath channel and zero-forcing receiver.

Signal arrays may carry leading batch axes; the sample axis is always last.
The designed filter is real and centred on w = 0, so the chain band-shifts
it onto the carrier block before convolving (``ChainConfig.taps``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import carrier_start
from .errors import ConfigurationError, ParameterError, SpectralNullError
from .numerics import dft, idft, is_power_of_two
from .spectral import FirFilter

NULL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SymbolFrame:
    """QPSK symbols ``A_k``; ``symbols[..., i]`` belongs to ``carriers[i]``."""

    carriers: tuple
    symbols: np.ndarray

    def as_dict(self) -> dict:
        return {k: complex(a) for k, a in zip(self.carriers, np.asarray(self.symbols).reshape(-1))}


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    sigma_n: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        object.__setattr__(self, "h", h)
        if h.shape[-1] < 1:
            raise ParameterError("channel needs at least one tap")
        if np.any(np.all(h == 0, axis=-1)):
            raise ParameterError("channel taps are all zero")
        if self.sigma_n < 0:
            raise ParameterError("noise level must be nonnegative")

    @property
    def L(self) -> int:
        return self.h.shape[-1]

    def response(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        basis = np.exp(-1j * np.outer(np.arange(self.L), omega))
        return self.h @ basis


@dataclass(frozen=True)
class ChainConfig:
    M: int
    D: int
    carriers: tuple
    filter: FirFilter

    def __post_init__(self):
        object.__setattr__(self, "carriers", tuple(int(k) for k in self.carriers))
        if not is_power_of_two(self.M):
            raise ParameterError("M must be a power of two")
        carrier_start(self.carriers, self.M)
        if self.D < 0:
            raise ParameterError("zero padding D must be nonnegative")
        if self.M + self.N + self.D - 1 > 2 * self.M:
            raise ConfigurationError(
                f"M+N+D-1 = {self.M + self.N + self.D - 1} exceeds the 2M receiver window")

    @property
    def N(self) -> int:
        return self.filter.N

    @property
    def K(self) -> int:
        return len(self.carriers)

    @property
    def shift(self) -> float:
        """Carrier-block midpoint ``s``; the design band is centred on it."""
        return carrier_start(self.carriers, self.M) + (self.K - 1) / 2.0

    @property
    def taps(self) -> np.ndarray:
        """Filter taps modulated by exp(2 pi j s n / M) onto the carrier block."""
        n = np.arange(self.N)
        return self.filter.coefficients * np.exp(2j * np.pi * self.shift * n / self.M)

    @property
    def tx_length(self) -> int:
        return self.M + self.N + self.D - 1

    def carrier_omega(self) -> np.ndarray:
        return 2 * np.pi * np.asarray(self.carriers) / self.M

    def filter_response(self) -> np.ndarray:
        """F(2 pi k / M) of the band-shifted taps at the used carriers."""
        basis = np.exp(-1j * np.outer(np.arange(self.N), self.carrier_omega()))
        return self.taps @ basis


def qpsk_modulate(bits, carriers=None) -> SymbolFrame:
    """Gray map bit pairs: bit 0 -> +1/sqrt2, bit 1 -> -1/sqrt2 on each of I and Q."""
    bits = np.asarray(bits)
    if bits.shape[-1] % 2:
        raise ParameterError("QPSK needs an even number of bits")
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("bits must be 0 or 1")
    b = bits.reshape(bits.shape[:-1] + (-1, 2)).astype(float)
    sym = ((1 - 2 * b[..., 0]) + 1j * (1 - 2 * b[..., 1])) / np.sqrt(2)
    if carriers is None:
        carriers = tuple(range(sym.shape[-1]))
    if len(carriers) != sym.shape[-1]:
        raise ParameterError(f"{len(carriers)} carriers need {2 * len(carriers)} bits")
    return SymbolFrame(tuple(carriers), sym)


def qpsk_demodulate(frame) -> np.ndarray:
    """Hard decisions; a component of exactly zero decides bit 0."""
    sym = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame)
    out = np.empty(sym.shape[:-1] + (2 * sym.shape[-1],), dtype=np.int8)
    out[..., 0::2] = sym.real < 0
    out[..., 1::2] = sym.imag < 0
    return out


def ofdm_modulate(frame: SymbolFrame, M: int) -> np.ndarray:
    """x_n = sum_k A_k / sqrt(M) exp(2 pi j k n / M), n = 0..M-1."""
    ks = np.asarray(frame.carriers)
    if np.any((ks < 0) | (ks >= M)):
        raise ParameterError("carrier index out of range")
    sym = np.asarray(frame.symbols, dtype=np.complex128)
    X = np.zeros(sym.shape[:-1] + (M,), dtype=np.complex128)
    X[..., ks] = sym
    return idft(X, M) * np.sqrt(M)


def apply_filter(x, f) -> np.ndarray:
    """Full linear convolution of each block with the taps (length M + N - 1)."""
    taps = f.coefficients if isinstance(f, FirFilter) else np.asarray(f)
    x = np.asarray(x)
    n_out = x.shape[-1] + taps.size - 1
    dtype = np.result_type(x.dtype, taps.dtype, np.float64)
    y = np.zeros(x.shape[:-1] + (n_out,), dtype=dtype)
    for m, fm in enumerate(taps):
        y[..., m:m + x.shape[-1]] += fm * x
    return y


def zero_pad_tx(y, D: int) -> np.ndarray:
    if D < 0:
        raise ParameterError("D must be nonnegative")
    y = np.asarray(y)
    return np.concatenate([y, np.zeros(y.shape[:-1] + (D,), dtype=y.dtype)], axis=-1)


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian with E|v|^2 = variance."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(variance / 2.0)


def draw_channel(L: int, rng: np.random.Generator, sigma_n: float = 0.0,
                 real_taps: bool = False, count: int | None = None) -> ChannelRealization:
    """Taps i.i.d. with variance 1/L, so E sum |h_l|^2 = 1.

    ``count`` draws a batch of independent channels (``h`` of shape (count, L)).
    """
    if L < 1:
        raise ParameterError("L must be at least 1")
    shape = (L,) if count is None else (count, L)
    if real_taps:
        h = rng.standard_normal(shape) / np.sqrt(L) + 0j
    else:
        h = complex_gaussian(rng, shape, 1.0 / L)
    return ChannelRealization(h, sigma_n)


def _convolve_channel(y, h):
    out = np.zeros(np.broadcast_shapes(y.shape[:-1], h.shape[:-1]) + (y.shape[-1],),
                   dtype=np.complex128)
    n = y.shape[-1]
    for l in range(h.shape[-1]):
        out[..., l:] += h[..., l:l + 1] * y[..., :n - l]
    return out


def channel_apply(y_tx, ch: ChannelRealization, rng: np.random.Generator | None = None,
                  D: int | None = None, noise=None) -> np.ndarray:
    """r_n = sum_l h_l y_{n-l} + v_n over the transmitted length.

    ``D`` (zero padding of ``y_tx``) enforces L-1 <= D. ``noise`` may supply
    unit-variance complex samples to be scaled by sigma_n instead of drawing
    them from ``rng``.
    """
    y_tx = np.asarray(y_tx)
    if D is not None and ch.L - 1 > D:
        raise ConfigurationError(
            f"channel length L={ch.L} needs L-1 <= D={D} to avoid intersymbol interference")
    r = _convolve_channel(y_tx, ch.h)
    if ch.sigma_n > 0:
        if noise is None:
            if rng is None:
                raise ParameterError("noisy channel needs an rng stream")
            noise = complex_gaussian(rng, r.shape)
        r = r + ch.sigma_n * noise
    return r


def receive_equalize(r, cfg: ChainConfig, ch: ChannelRealization) -> SymbolFrame:
    """Zero-pad to 2M, transform, read bins 2k and divide by sqrt(M) F H."""
    r = np.asarray(r)
    if r.shape[-1] > 2 * cfg.M:
        raise ConfigurationError("received block longer than 2M")
    R = dft(r, 2 * cfg.M)[..., 2 * np.asarray(cfg.carriers)]
    FH = cfg.filter_response() * ch.response(cfg.carrier_omega())
    if np.any(np.abs(FH) < NULL_THRESHOLD):
        raise SpectralNullError("|F H| vanishes at a used carrier; zero forcing undefined")
    return SymbolFrame(cfg.carriers, R / (np.sqrt(cfg.M) * FH))


def transmit(frame: SymbolFrame, cfg: ChainConfig) -> np.ndarray:
    """OFDM modulation, band-shifted filtering and zero padding."""
    x = ofdm_modulate(frame, cfg.M)
    return zero_pad_tx(apply_filter(x, cfg.taps), cfg.D)
