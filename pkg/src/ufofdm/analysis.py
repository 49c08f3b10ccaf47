"""Power spectra, BER curves, PAPR distributions and closed-form SNR statistics.

Monte Carlo drivers split work into fixed blocks of frames. Block ``b`` of an
experiment draws from a stream seeded by ``(master_seed, experiment_id, b)``,
so results do not depend on how many worker threads process the blocks.
"""
from __future__ import annotations

import csv
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .chain import ChainConfig, ChannelRealization, apply_filter, channel_apply, \
    complex_gaussian, draw_channel, ofdm_modulate, qpsk_demodulate, qpsk_modulate, \
    receive_equalize, zero_pad_tx, NULL_THRESHOLD
from .design import DesignSpec, expected_spectrum, shift_carriers
from .errors import ExperimentError, ParameterError
from .numerics import dft, idft, is_power_of_two
from .spectral import FirFilter, autocorrelation

FRAMES_PER_BLOCK = 256
MAX_REDRAWS = 10_000
BIT_ENERGY = 0.5  # unit-energy QPSK symbol carries two bits


def experiment_id(name: str) -> int:
    return zlib.crc32(name.encode())


def block_rng(master_seed: int, exp_id: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence([master_seed & (2 ** 64 - 1), exp_id, block])
    return np.random.Generator(np.random.PCG64(ss))


def _run_blocks(fn, n_blocks: int, threads: int):
    if threads <= 1 or n_blocks <= 1:
        return [fn(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_blocks)))


def _block_sizes(total: int):
    n_blocks = -(-total // FRAMES_PER_BLOCK)
    return n_blocks, [min(FRAMES_PER_BLOCK, total - b * FRAMES_PER_BLOCK) for b in range(n_blocks)]


# --------------------------------------------------------------------------- spectra

@dataclass
class PsdTrace:
    omega: np.ndarray
    analytic_db: np.ndarray
    empirical_db: np.ndarray | None = None
    frames: int = 0

    def stopband_max_db(self, start: float) -> float:
        return float(self.analytic_db[self.omega >= start].max())


def _to_db(values, ref):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(np.asarray(values) / ref)


def _analytic_linear(f: FirFilter, spec: DesignSpec, omega):
    g = autocorrelation(f).g
    from .design import power_response
    return np.maximum(power_response(g, omega), 0.0) * expected_spectrum(spec, shift_carriers(spec), omega)


def analytic_psd(f: FirFilter, spec: DesignSpec, grid_points: int = 4096) -> PsdTrace:
    """|F(w)|^2 E|X(w)|^2 on a uniform grid over [0, pi], peak normalized to 0 dB."""
    if grid_points < 256:
        raise ParameterError("grid_points must be at least 256")
    w = np.linspace(0.0, np.pi, grid_points)
    lin = _analytic_linear(f, spec, w)
    return PsdTrace(w, _to_db(lin, lin.max()))


def filter_sidelobe_db(f: FirFilter, points: int = 2 ** 14) -> float:
    """Highest |F|^2 past the first null of the main lobe, in dB re the peak.

    NaN when |F| has no interior minimum on [0, pi] (e.g. a single tap).
    """
    from .design import power_response
    w = np.linspace(0.0, np.pi, points)
    mag = np.maximum(power_response(autocorrelation(f).g, w), 0.0)
    rising = np.flatnonzero(mag[1:] > mag[:-1])
    if rising.size == 0 or rising[0] == 0:
        return float("nan")
    return float(_to_db(mag[rising[0]:].max(), mag.max()))


def shifted_ofdm_blocks(spec: DesignSpec, symbols: np.ndarray) -> np.ndarray:
    """OFDM blocks with carriers at the shifted frequencies (symmetric about w = 0)."""
    wc = shift_carriers(spec).full
    n = np.arange(spec.M)
    basis = np.exp(1j * np.outer(wc, n)) / np.sqrt(spec.M)
    return symbols @ basis


def empirical_psd(f: FirFilter, spec: DesignSpec, frames: int, fft_size: int,
                  rng: np.random.Generator) -> PsdTrace:
    """Averaged periodogram of filtered random-QPSK blocks on the fft grid over [0, pi].

    Both columns are normalized by the analytic peak on the same grid.
    """
    if not is_power_of_two(fft_size) or fft_size < 4 * spec.M:
        raise ParameterError("fft_size must be a power of two and at least 4M")
    if frames < 1:
        raise ParameterError("need at least one frame")
    acc = np.zeros(fft_size)
    done = 0
    while done < frames:
        batch = min(1024, frames - done)
        bits = rng.integers(0, 2, size=(batch, 2 * spec.K))
        x = shifted_ofdm_blocks(spec, qpsk_modulate(bits).symbols)
        y = apply_filter(x, f.coefficients)
        acc += (np.abs(dft(y, fft_size)) ** 2).sum(axis=0)
        done += batch
    half = fft_size // 2 + 1
    w = 2 * np.pi * np.arange(half) / fft_size
    emp = acc[:half] / frames
    lin = _analytic_linear(f, spec, w)
    peak = lin.max()
    return PsdTrace(w, _to_db(lin, peak), _to_db(emp, peak), frames)


# --------------------------------------------------------------------------- SNR

def snr_theoretical(cfg: ChainConfig, channel: ChannelRealization, sigma_n: float) -> np.ndarray:
    """Per-carrier amplitude SNR sqrt(M/(M+N+D-1)) |F H| / sigma_n after zero forcing."""
    if not sigma_n > 0:
        raise ParameterError("sigma_n must be positive")
    FH = cfg.filter_response() * channel.response(cfg.carrier_omega())
    return np.sqrt(cfg.M / cfg.tx_length) * np.abs(FH) / sigma_n


def sigma_tilde(f: FirFilter, spec: DesignSpec) -> float:
    """sqrt of the mean of |F|^2 over the (shifted) carrier frequencies."""
    wc = shift_carriers(spec).full
    return float(np.sqrt(np.mean(np.abs(f.response(wc)) ** 2)))


# --------------------------------------------------------------------------- BER

@dataclass(frozen=True)
class ChannelModel:
    kind: str = "awgn"  # awgn | rayleigh
    L: int = 1
    real_taps: bool = False

    def __post_init__(self):
        if self.kind not in ("awgn", "rayleigh"):
            raise ParameterError(f"unknown channel model {self.kind!r}")
        if self.L < 1:
            raise ParameterError("L must be at least 1")

    @property
    def label(self) -> str:
        return "awgn_flat" if self.kind == "awgn" else f"rayleigh({self.L})"


@dataclass
class BerPoint:
    snr_db: float
    eb_n0_db: float
    tx_eb_n0_db: float
    bits: int
    bit_errors: int
    ci_low: float
    ci_high: float
    redraws: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


@dataclass
class BerCurve:
    points: list
    snr_definition: str
    channel_model: str
    seed: int
    filter_provenance: str = ""
    sigma_tilde: float = float("nan")

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def clopper_pearson(errors: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1 - level
    lo = 0.0 if errors == 0 else float(beta.ppf(a / 2, errors, n - errors + 1))
    hi = 1.0 if errors == n else float(beta.ppf(1 - a / 2, errors + 1, n - errors))
    return lo, hi


def noise_sigma(snr_db: float, cfg: ChainConfig, snr_definition: str) -> float:
    """Noise std per complex sample for a grid value in dB.

    ``sigma_s_over_sigma_n``: the value is sigma_s^2/sigma_n^2 with sigma_s^2 the
    energy per bit before filtering (1/2 for unit-energy QPSK).
    ``eb_n0``: the value is the transmitted Eb/N0, (M+N-1)/M sigma_s^2 / sigma_n^2.
    """
    if np.isposinf(snr_db):
        return 0.0
    ratio = 10 ** (snr_db / 10)
    if snr_definition == "eb_n0":
        ratio /= (cfg.M + cfg.N - 1) / cfg.M
    elif snr_definition != "sigma_s_over_sigma_n":
        raise ParameterError(f"unknown SNR definition {snr_definition!r}")
    return float(np.sqrt(BIT_ENERGY / ratio))


def _draw_channels(model: ChannelModel, cfg: ChainConfig, rng, count: int):
    if model.kind == "awgn":
        return np.ones((count, 1), dtype=np.complex128), 0
    F = cfg.filter_response()
    basis = np.exp(-1j * np.outer(np.arange(model.L), cfg.carrier_omega()))
    h = draw_channel(model.L, rng, real_taps=model.real_taps, count=count).h
    redraws = 0
    bad = np.any(np.abs((h @ basis) * F) < NULL_THRESHOLD, axis=1)
    streak = 0
    while bad.any():
        streak += 1
        if streak > MAX_REDRAWS:
            raise ExperimentError("spectral-null redraw limit exceeded")
        redraws += int(bad.sum())
        h[bad] = draw_channel(model.L, rng, real_taps=model.real_taps, count=int(bad.sum())).h
        bad = np.any(np.abs((h @ basis) * F) < NULL_THRESHOLD, axis=1)
    return h, redraws


def run_ber_experiment(cfg: ChainConfig, channel_model: ChannelModel, snr_grid_db,
                       bits_per_point: int, master_seed: int, threads: int = 1,
                       snr_definition: str = "sigma_s_over_sigma_n") -> BerCurve:
    """Bit error rate of the full chain at each SNR point.

    Random streams depend only on the seed, channel model and SNR index, so
    two filters run with the same seed see identical bits, channels and noise.
    """
    if bits_per_point < 10_000:
        raise ParameterError("bits_per_point must be at least 1e4")
    if channel_model.L - 1 > cfg.D:
        raise ParameterError(
            f"channel length L={channel_model.L} violates L-1 <= D={cfg.D} (no ISI assumption)")
    bits_per_frame = 2 * cfg.K
    n_frames = -(-bits_per_point // bits_per_frame)
    n_blocks, sizes = _block_sizes(n_frames)
    taps = cfg.taps
    points = []
    for idx, snr in enumerate(snr_grid_db):
        sigma = noise_sigma(float(snr), cfg, snr_definition)
        exp_id = experiment_id(f"ber/{channel_model.label}/{idx}")

        def block(b, sigma=sigma, exp_id=exp_id):
            rng = block_rng(master_seed, exp_id, b)
            count = sizes[b]
            bits = rng.integers(0, 2, size=(count, bits_per_frame))
            h, redraws = _draw_channels(channel_model, cfg, rng, count)
            noise = complex_gaussian(rng, (count, cfg.tx_length))
            frame = qpsk_modulate(bits, cfg.carriers)
            y = zero_pad_tx(apply_filter(ofdm_modulate(frame, cfg.M), taps), cfg.D)
            ch = ChannelRealization(h, sigma)
            r = channel_apply(y, ch, D=cfg.D, noise=noise)
            est = receive_equalize(r, cfg, ch)
            return int(np.count_nonzero(qpsk_demodulate(est) != bits)), redraws

        results = _run_blocks(block, n_blocks, threads)
        errors = sum(e for e, _ in results)
        redraws = sum(r for _, r in results)
        n_bits = n_frames * bits_per_frame
        lo, hi = clopper_pearson(errors, n_bits)
        # Stated directly from the grid value; going through sigma adds round-off.
        tx_offset = 10 * np.log10((cfg.M + cfg.N - 1) / cfg.M)
        if snr_definition == "eb_n0":
            eb_n0, tx_eb_n0 = snr - tx_offset, snr
        else:
            eb_n0, tx_eb_n0 = snr, snr + tx_offset
        points.append(BerPoint(float(snr), float(eb_n0), float(tx_eb_n0),
                               n_bits, errors, lo, hi, redraws))
    spec = DesignSpec(M=cfg.M, N=cfg.N, carriers=cfg.carriers)
    return BerCurve(points, snr_definition, channel_model.label, master_seed,
                    cfg.filter.provenance, sigma_tilde(cfg.filter, spec))


# --------------------------------------------------------------------------- PAPR

@dataclass
class PaprCcdf:
    thresholds_db: np.ndarray
    ccdf: np.ndarray
    symbols_evaluated: int
    oversampling: int
    samples_db: np.ndarray = field(default=None, repr=False)

    def threshold_at(self, probability: float) -> float:
        """PAPR value exceeded with the given probability (empirical quantile)."""
        return float(np.quantile(self.samples_db, 1.0 - probability))


def default_thresholds() -> np.ndarray:
    return np.round(np.arange(0, 1601) * 0.01, 2)


def _interpolate(y: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation by zero insertion in the transform domain."""
    n = y.shape[-1]
    size = 1 << (n - 1).bit_length()
    Y = dft(y, size)
    big = np.zeros(y.shape[:-1] + (size * factor,), dtype=np.complex128)
    h = size // 2
    big[..., :h] = Y[..., :h]
    big[..., -h:] = Y[..., -h:]
    return idft(big, size * factor)[..., : n * factor] * factor


def compute_papr_ccdf(f: FirFilter, spec: DesignSpec, symbols: int, master_seed: int,
                      thresholds_db=None, interpolate: int = 1, threads: int = 1) -> PaprCcdf:
    """Empirical CCDF of max|y_n|^2 / P_av with P_av = K/M.

    Each symbol's M + N - 1 filtered samples are used without zero padding;
    the identity filter yields the plain OFDM samples.
    """
    if symbols < 1:
        raise ParameterError("need at least one symbol")
    if interpolate < 1:
        raise ParameterError("interpolation factor must be >= 1")
    cfg = ChainConfig(spec.M, 0, spec.carriers, f)
    taps = cfg.taps
    p_av = spec.K / spec.M
    exp_id = experiment_id("papr")
    n_blocks, sizes = _block_sizes(symbols)

    def block(b):
        rng = block_rng(master_seed, exp_id, b)
        bits = rng.integers(0, 2, size=(sizes[b], 2 * spec.K))
        y = apply_filter(ofdm_modulate(qpsk_modulate(bits, spec.carriers), spec.M), taps)
        if interpolate > 1:
            y = _interpolate(y, interpolate)
        return np.max(np.abs(y) ** 2, axis=-1) / p_av

    papr = np.concatenate(_run_blocks(block, n_blocks, threads))
    papr_db = 10 * np.log10(papr)
    thr = default_thresholds() if thresholds_db is None else np.asarray(thresholds_db, float)
    ordered = np.sort(papr_db)
    exceed = papr_db.size - np.searchsorted(ordered, thr, side="right")
    return PaprCcdf(thr, exceed / papr_db.size, int(papr_db.size), interpolate, papr_db)


# --------------------------------------------------------------------------- CSV output

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if np.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


def write_ber_csv(curve: BerCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "eb_n0_db", "bits", "errors", "ber", "ci_low", "ci_high",
                    "tx_eb_n0_db"])
        for p in curve.points:
            w.writerow([_fmt(p.snr_db), _fmt(p.eb_n0_db), _fmt(p.bits), _fmt(p.bit_errors),
                        _fmt(p.ber), _fmt(p.ci_low), _fmt(p.ci_high), _fmt(p.tx_eb_n0_db)])


def write_ccdf_csv(ccdf: PaprCcdf, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold_db", "ccdf"])
        for t, p in zip(ccdf.thresholds_db, ccdf.ccdf):
            w.writerow([_fmt(t), _fmt(p)])


def write_psd_csv(trace: PsdTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega_over_pi", "analytic_db", "empirical_db"])
        emp = trace.empirical_db if trace.empirical_db is not None else [None] * trace.omega.size
        for om, a, e in zip(trace.omega, trace.analytic_db, emp):
            w.writerow([_fmt(om / np.pi), _fmt(a), "" if e is None else _fmt(e)])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
