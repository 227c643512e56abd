import numpy as np
import pytest
from scipy.signal import freqz

from nstate.dsp import (BAND_BY_NAME, BANDS, band_power, design_bandpass,
                        epochs_psd, filtfilt, welch_psd)
from nstate.numerics import seeded_rng

FS = 250.0


@pytest.fixture(scope="module")
def fir():
    return design_bandpass(1.0, 45.0, FS)


def magnitude(fir, freqs):
    w, h = freqz(fir.taps, worN=65_536, fs=fir.fs)
    return np.interp(freqs, w, np.abs(h))


def test_taps_symmetric_and_odd(fir):
    assert fir.taps.size % 2 == 1
    assert np.allclose(fir.taps, fir.taps[::-1])


def test_design_records_transition_widths(fir):
    assert fir.trans_low == pytest.approx(1.0)
    assert fir.trans_high == pytest.approx(11.25)


def test_dc_gain_near_zero(fir):
    assert abs(fir.taps.sum()) <= 1e-12


def test_passband_flat_within_bounds(fir):
    freqs = np.linspace(2.0, 40.0, 400)
    assert np.max(np.abs(magnitude(fir, freqs) - 1.0)) <= 0.06


def test_stopband_attenuation(fir):
    w, h = freqz(fir.taps, worN=65_536, fs=fir.fs)
    mag = np.abs(h)
    low_stop = mag[w <= 0.25].max()
    high_stop = mag[w >= 56.0].max()
    assert 20 * np.log10(low_stop) <= -30.0
    assert 20 * np.log10(high_stop) <= -30.0


def test_design_is_deterministic():
    a = design_bandpass(1.0, 45.0, FS)
    b = design_bandpass(1.0, 45.0, FS)
    assert np.array_equal(a.taps, b.taps)


def test_design_rejects_bad_edges():
    with pytest.raises(ValueError):
        design_bandpass(45.0, 1.0, FS)
    with pytest.raises(ValueError):
        design_bandpass(1.0, 130.0, FS)


def test_filtfilt_zero_in_zero_out(fir):
    x = np.zeros((2, 5_000), dtype=np.float32)
    assert np.allclose(filtfilt(x, fir), 0.0)


def test_filtfilt_passband_sine_rms_and_zero_lag(fir):
    t = np.arange(5_000) / FS
    x = np.sin(2 * np.pi * 10.0 * t)[None, :]
    y = filtfilt(x, fir)
    assert y.shape == x.shape
    rms_in = np.sqrt((x ** 2).mean())
    rms_out = np.sqrt((y ** 2).mean())
    assert abs(rms_out - rms_in) <= 0.05 * rms_in
    # cross-correlation peaks at zero lag
    xc = np.correlate(y[0] - y.mean(), x[0] - x.mean(), mode="full")
    assert np.argmax(xc) == x.shape[1] - 1


def test_filtfilt_removes_dc_offset(fir):
    x = np.full((1, 10_000), 100.0)
    y = filtfilt(x, fir)
    assert abs(y.mean()) <= 1.0


def test_filtfilt_never_amplifies_noise_variance(fir):
    rng = seeded_rng(3, 7)
    for trial in range(5):
        x = rng.standard_normal((3, 4_000))
        y = filtfilt(x, fir)
        assert y.var() < x.var()


def test_filtfilt_rejects_short_signal(fir):
    with pytest.raises(ValueError):
        filtfilt(np.zeros((1, 3 * fir.taps.size)), fir)


def test_welch_zero_signal():
    est = welch_psd(np.zeros((2, 1_000)), fs=FS)
    assert np.allclose(est.power, 0.0)
    assert est.frequencies[0] == 0.0
    assert est.frequencies[-1] == pytest.approx(FS / 2)


def test_welch_sine_peak_and_total_power():
    t = np.arange(2_500) / FS
    x = np.sin(2 * np.pi * 10.0 * t)[None, :]
    est = welch_psd(x, fs=FS)
    peak = est.frequencies[np.argmax(est.power[0])]
    assert peak == pytest.approx(10.0, abs=est.df / 2)
    total = est.power[0].sum() * est.df
    assert total == pytest.approx(0.5, rel=0.05)


def test_welch_white_noise_flat():
    rng = seeded_rng(12, 9)
    x = rng.standard_normal((1, 25_000))
    est = welch_psd(x, fs=FS)
    mask = (est.frequencies >= 5.0) & (est.frequencies <= 100.0)
    level = 2.0 / FS
    assert np.max(np.abs(est.power[0][mask] - level)) <= 0.2 * level


def test_welch_parseval_consistency():
    rng = seeded_rng(12, 1)
    x = rng.standard_normal((2, 20_000)) * 3.0
    est = welch_psd(x, fs=FS)
    integral = est.power.sum(axis=1) * est.df
    assert np.allclose(integral, x.var(axis=1), rtol=0.05)


def test_welch_requires_one_segment():
    with pytest.raises(ValueError):
        welch_psd(np.zeros((1, 100)), fs=FS, segment=250)


def test_psd_nonnegative_on_noise():
    x = seeded_rng(12, 2).standard_normal((4, 3_000))
    est = welch_psd(x, fs=FS)
    assert np.all(est.power >= 0.0)


def test_band_power_sine_concentrates_in_alpha():
    t = np.arange(5_000) / FS
    x = np.sin(2 * np.pi * 10.0 * t)[None, :]
    est = welch_psd(x, fs=FS)
    alpha = band_power(est, BAND_BY_NAME["alpha"])[0]
    for band in BANDS:
        if band.name != "alpha":
            assert alpha >= 50.0 * band_power(est, band)[0]


def test_band_power_zero_signal():
    est = welch_psd(np.zeros((1, 1_000)), fs=FS)
    for band in BANDS:
        assert band_power(est, band)[0] == 0.0


def test_band_powers_bounded_by_total():
    x = seeded_rng(12, 3).standard_normal((2, 8_000))
    est = welch_psd(x, fs=FS)
    total = est.power.sum(axis=1) * est.df
    summed = sum(band_power(est, band) for band in BANDS)
    assert np.all(summed <= total + 1e-12)


def test_epochs_psd_matches_single_periodograms():
    rng = seeded_rng(12, 4)
    epochs = rng.standard_normal((8, 3, 250)).astype(np.float32)
    est = epochs_psd(epochs, fs=FS)
    assert est.power.shape == (3, 126)
    single = welch_psd(epochs[:, 0, :], fs=FS, segment=250)
    assert np.allclose(est.power[0], single.power.mean(axis=0), rtol=1e-6)
