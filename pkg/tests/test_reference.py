import numpy as np
import pytest
from scipy.signal.windows import chebwin

from ufofdm.chain import ChainConfig, ofdm_modulate, qpsk_modulate, transmit
from ufofdm.design import DesignSpec, power_vector, shift_carriers
from ufofdm.errors import ParameterError
from ufofdm.reference import chebyshev_mainlobe_edge, dolph_chebyshev, identity_filter
from ufofdm.spectral import autocorrelation


def side_lobe_peaks_db(f, N, att, points=1 << 15):
    """Local maxima of |F| (dB re the peak) beyond the main-lobe edge."""
    w = np.linspace(0, np.pi, points)
    mag = np.abs(np.exp(-1j * np.outer(w, np.arange(N))) @ f.coefficients)
    db = 20 * np.log10(mag / mag.max())
    edge = chebyshev_mainlobe_edge(N, att)
    peaks = np.flatnonzero((db[1:-1] >= db[:-2]) & (db[1:-1] >= db[2:])) + 1
    peaks = peaks[w[peaks] > edge]
    if w[-1] > edge and db[-1] >= db[-2]:
        peaks = np.append(peaks, points - 1)  # a lobe centred on pi
    return db[peaks], db[w > edge + 1e-3]


@pytest.mark.filterwarnings("ignore:This window is not suitable")
def test_matches_scipy_window():
    for N, att in [(16, 45.0), (8, 30.0), (9, 50.0), (2, 20.0)]:
        ours = dolph_chebyshev(N, att).coefficients
        ref = chebwin(N, att)
        np.testing.assert_allclose(ours / ours.max(), ref / ref.max(), atol=1e-10)


def test_forty_five_db_side_lobes(chebyshev):
    peaks, stop = side_lobe_peaks_db(chebyshev, 16, 45.0)
    assert peaks.size >= 5
    assert np.all(np.abs(peaks + 45.0) <= 0.5)
    assert stop.max() <= -45.0 + 0.5


def test_equiripple_thirty_db():
    f = dolph_chebyshev(8, 30.0)
    peaks, _ = side_lobe_peaks_db(f, 8, 30.0)
    assert peaks.size >= 3
    assert peaks.max() - peaks.min() <= 0.1


def test_two_taps_proportional_to_ones():
    for att in (3.0, 45.0, 120.0):
        c = dolph_chebyshev(2, att).coefficients
        np.testing.assert_allclose(c / c[0], [1.0, 1.0], rtol=1e-14)


def test_rejects_short_or_bad():
    with pytest.raises(ParameterError):
        dolph_chebyshev(1, 45.0)
    with pytest.raises(ParameterError):
        dolph_chebyshev(8, 0.0)


@pytest.mark.parametrize("N", [2, 3, 8, 16, 17, 33])
def test_symmetric(N):
    c = dolph_chebyshev(N, 45.0, DesignSpec(N=N)).coefficients
    np.testing.assert_allclose(c, c[::-1], atol=1e-12)


def test_normalized_to_power_equality(chebyshev, default_spec):
    b = power_vector(default_spec, shift_carriers(default_spec))
    power = b @ autocorrelation(chebyshev).g
    assert power == pytest.approx(default_spec.power_target, rel=1e-9)
    assert chebyshev.provenance == "dolph_chebyshev"
    assert chebyshev.params == {"attenuation_db": 45.0}


def test_identity():
    f = identity_filter()
    np.testing.assert_array_equal(f.coefficients, [1.0])
    assert f.N == 1
    np.testing.assert_array_equal(autocorrelation(f).g, [1.0])


def test_identity_chain_is_plain_ofdm(identity, default_spec):
    rng = np.random.default_rng(11)
    cfg = ChainConfig(default_spec.M, 0, default_spec.carriers, identity)
    for _ in range(5):
        frame = qpsk_modulate(rng.integers(0, 2, 2 * cfg.K), cfg.carriers)
        expected = ofdm_modulate(frame, cfg.M)
        n = np.arange(cfg.M)
        direct = sum(a / np.sqrt(cfg.M) * np.exp(2j * np.pi * k * n / cfg.M)
                     for k, a in zip(frame.carriers, frame.symbols))
        out = transmit(frame, cfg)
        assert out.shape == (cfg.M,)
        np.testing.assert_allclose(out, expected, atol=1e-14)
        np.testing.assert_allclose(out, direct, atol=1e-12)
