from fractions import Fraction

import numpy as np
import pytest

from apps.filterbank.schemas import Spectrogram
from apps.filterbank.services import (
    analyze,
    frame_geometry,
    num_frames_for,
    sine_window,
    synthesize,
    synthesize_adjoint,
)
from core.audio import AudioBuffer
from core.constants import DEFAULT_FRAME_DURATION_S
from core.exceptions import GeometryTooSmall, InvalidArgument


@pytest.mark.numerics
class TestFrameGeometry:
    @pytest.mark.parametrize(
        'fs_hz, frame_len',
        [(48000, 2048), (8000, 342), (44100, 1882), (16000, 682)],
    )
    def test_frame_len_follows_duration(self, fs_hz, frame_len):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, fs_hz)
        assert geometry.frame_len == frame_len
        assert geometry.hop_len == frame_len // 2
        assert geometry.hop_fraction == Fraction(1, 2)
        assert geometry.num_bins == frame_len // 2 + 1

    def test_bin_spacing_is_rate_independent(self):
        spacings = {
            round(frame_geometry(DEFAULT_FRAME_DURATION_S, fs).bin_spacing_hz)
            for fs in (8000, 48000)
        }
        assert spacings == {23}

    def test_duration_accepts_string_fraction(self):
        geometry = frame_geometry('16/375', 48000)
        assert geometry.frame_duration_s == Fraction(16, 375)

    def test_too_small_frame_raises(self):
        with pytest.raises(GeometryTooSmall):
            frame_geometry(Fraction(1, 1000), 1000)

    def test_non_positive_rate_raises(self):
        with pytest.raises(InvalidArgument):
            frame_geometry(DEFAULT_FRAME_DURATION_S, 0)

    def test_num_frames_covers_signal(self):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        assert num_frames_for(8000, geometry) == 48
        assert num_frames_for(171, geometry) == 2

    def test_sine_window_is_power_complementary(self):
        w = sine_window(342)
        np.testing.assert_allclose(w[:171] ** 2 + w[171:] ** 2, 1.0)


@pytest.mark.numerics
class TestAnalysisSynthesis:
    @pytest.mark.parametrize('fs_hz', [8000, 16000, 32000, 44100, 48000])
    def test_perfect_reconstruction(self, noise, fs_hz):
        x = noise(fs_hz)
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, fs_hz)
        y = synthesize(analyze(x, geometry))
        assert y.data.shape == x.data.shape
        err = np.linalg.norm(y.data - x.data) / np.linalg.norm(x.data)
        assert err < 1e-9

    def test_stereo_reconstruction(self, noise):
        x = noise(8000, seconds=0.5, channels=2)
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        y = synthesize(analyze(x, geometry))
        np.testing.assert_allclose(y.data, x.data, atol=1e-10)

    def test_short_signal_round_trip(self):
        x = AudioBuffer(data=np.arange(5.0), fs_hz=8000)
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        y = synthesize(analyze(x, geometry))
        np.testing.assert_allclose(y.data, x.data, atol=1e-12)

    def test_linearity(self, noise):
        x, y = noise(8000), noise(8000)
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        combined = analyze(x.with_data(2.0 * x.data - 3.0 * y.data), geometry)
        expected = (
            2.0 * analyze(x, geometry).data - 3.0 * analyze(y, geometry).data
        )
        np.testing.assert_allclose(combined.data, expected, atol=1e-10)

    def test_matches_direct_dft(self, noise):
        x = noise(8000)
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        spec = analyze(x, geometry)
        n_len, hop, t = geometry.frame_len, geometry.hop_len, 5
        frame = x.data[(t - 1) * hop : (t - 1) * hop + n_len, 0]
        direct = np.fft.rfft(sine_window(n_len) * frame)
        np.testing.assert_allclose(spec.data[t, :, 0], direct, atol=1e-10)

    def test_bin_centered_cosine_leakage(self):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 48000)
        n_len, k = geometry.frame_len, 100
        n = np.arange(48000)
        x = AudioBuffer(data=np.cos(2 * np.pi * k * n / n_len), fs_hz=48000)
        mags = np.abs(analyze(x, geometry).data[5, :, 0])
        far = np.abs(np.arange(geometry.num_bins) - k) >= 6
        assert 20 * np.log10(mags[k] / mags[far].max()) >= 40.0

    def test_low_bins_agree_across_rates(self, tones):
        duration = Fraction(342, 8000)
        low, high = (
            analyze(tones(fs), frame_geometry(duration, fs))
            for fs in (8000, 32000)
        )
        assert high.geometry.frame_len == 4 * low.geometry.frame_len
        # бины ниже 3 кГц, кадры целиком внутри сигнала
        frames, bins = slice(2, 20), slice(0, 128)
        a = np.abs(low.data[frames, bins, 0]) / low.geometry.frame_len
        b = np.abs(high.data[frames, bins, 0]) / high.geometry.frame_len
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 0.01

    def test_rate_mismatch_raises(self, noise):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 48000)
        with pytest.raises(InvalidArgument):
            analyze(noise(8000), geometry)

    def test_synthesis_rejects_short_spectrogram(self, noise):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        spec = analyze(noise(8000), geometry)
        cut = Spectrogram(
            data=spec.data[:10],
            geometry=geometry,
            signal_length=spec.signal_length,
        )
        with pytest.raises(InvalidArgument):
            synthesize(cut)

    def test_adjoint_identity(self, noise, rng):
        geometry = frame_geometry(DEFAULT_FRAME_DURATION_S, 8000)
        spec = analyze(noise(8000, seconds=0.25), geometry)
        shape = spec.data.shape
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        spec = spec.with_data(data)
        g = rng.standard_normal((spec.signal_length, 1))
        lhs = np.sum(synthesize(spec).data * g)
        adj = synthesize_adjoint(g, geometry, spec.num_frames)
        rhs = np.sum(data.real * adj.real + data.imag * adj.imag)
        assert lhs == pytest.approx(rhs, rel=1e-10)
