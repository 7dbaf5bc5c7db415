from fractions import Fraction

import numpy as np
import pytest

from apps.data.resampling import resample
from apps.features.schemas import MaskTensor
from apps.metrics.services import si_decompose
from apps.pipeline.services import (
    build_model,
    remix,
    separate,
    separate_via_rate,
    transfer,
    with_estimated_whitening,
)
from apps.pipeline.types import ChannelMode
from core.exceptions import InvalidArgument


def _forced_masks(value_re: float):
    def fake(features, params, config):
        data = np.zeros(features.data.shape)
        data[..., 0::2] = value_re
        return MaskTensor(data=data)

    return fake


@pytest.mark.services
class TestBuildModel:
    def test_geometry_and_identity_whitening(self, mono_model):
        assert mono_model.geometry.frame_len == 342
        assert mono_model.whitening.num_bins == 172
        np.testing.assert_array_equal(mono_model.whitening.mean, 0.0)
        assert mono_model.core_params['mask.scale'].dtype == np.float32

    def test_channel_mode_mismatch_raises(self, tiny_core):
        with pytest.raises(InvalidArgument):
            build_model(
                fs_hz=8000,
                channel_mode=ChannelMode.STEREO,
                core_config=tiny_core,
            )

    def test_default_is_full_stereo_core(self):
        model = build_model(fs_hz=8000)
        assert model.core_params.scalar_count() == 359_438


@pytest.mark.services
class TestSeparate:
    def test_stems_sum_to_mixture(self, mono_model, noise):
        mixture = noise(8000, seconds=0.5)
        foreground, background = separate(mono_model, mixture)
        assert foreground.data.shape == mixture.data.shape
        np.testing.assert_allclose(
            (foreground + background).data, mixture.data, atol=1e-12
        )

    def test_stereo_stems_sum_to_mixture(self, stereo_model, noise):
        mixture = noise(8000, seconds=0.5, channels=2)
        foreground, background = separate(stereo_model, mixture)
        np.testing.assert_allclose(
            foreground.data + background.data, mixture.data, atol=1e-12
        )

    def test_zero_masks_give_silent_foreground(
        self, mono_model, noise, mocker
    ):
        mocker.patch(
            'apps.pipeline.services.core_forward',
            side_effect=_forced_masks(0.0),
        )
        mixture = noise(8000, seconds=0.5)
        foreground, background = separate(mono_model, mixture)
        np.testing.assert_array_equal(foreground.data, 0.0)
        np.testing.assert_allclose(background.data, mixture.data)

    def test_unit_masks_return_mixture(self, mono_model, noise, mocker):
        mocker.patch(
            'apps.pipeline.services.core_forward',
            side_effect=_forced_masks(1.0),
        )
        mixture = noise(8000, seconds=0.5)
        foreground, background = separate(mono_model, mixture)
        np.testing.assert_allclose(foreground.data, mixture.data, atol=1e-9)
        np.testing.assert_allclose(background.data, 0.0, atol=1e-9)

    def test_rate_mismatch_raises(self, mono_model, noise):
        with pytest.raises(InvalidArgument):
            separate(mono_model, noise(16000, seconds=0.25))

    def test_channel_mismatch_raises(self, mono_model, noise):
        with pytest.raises(InvalidArgument):
            separate(mono_model, noise(8000, seconds=0.25, channels=2))

    def test_remix(self, mono_model, noise):
        mixture = noise(8000, seconds=0.5)
        foreground, background = separate(mono_model, mixture)
        same = remix(foreground, background, 0.0)
        np.testing.assert_allclose(same.data, mixture.data, atol=1e-12)
        quiet = remix(foreground, background, -20.0)
        np.testing.assert_allclose(
            quiet.data, foreground.data + 0.1 * background.data
        )


@pytest.mark.services
class TestSeparateViaRate:
    def test_output_at_input_rate(self, mono_model, noise):
        mixture = noise(16000, seconds=0.5)
        foreground, background = separate_via_rate(mono_model, mixture)
        assert foreground.fs_hz == 16000
        assert foreground.data.shape == mixture.data.shape
        np.testing.assert_allclose(
            foreground.data + background.data, mixture.data, atol=1e-12
        )

    def test_same_rate_is_plain_separation(self, mono_model, noise):
        mixture = noise(8000, seconds=0.5)
        direct, _ = separate(mono_model, mixture)
        via, _ = separate_via_rate(mono_model, mixture)
        np.testing.assert_array_equal(direct.data, via.data)

    def test_unit_masks_give_band_limited_mixture(
        self, mono_model, noise, mocker
    ):
        mocker.patch(
            'apps.pipeline.services.core_forward',
            side_effect=_forced_masks(1.0),
        )
        mixture = noise(48000, seconds=0.5)
        foreground, _ = separate_via_rate(mono_model, mixture)
        window = np.hanning(mixture.num_samples)
        freqs = np.fft.rfftfreq(mixture.num_samples, 1 / 48000)
        out = np.abs(np.fft.rfft(window * foreground.data[:, 0]))
        ref = np.abs(np.fft.rfft(window * mixture.data[:, 0]))
        high = out[freqs > 6000].max()
        assert 20 * np.log10(ref[freqs < 3000].max() / high) > 30.0


@pytest.mark.services
class TestTransfer:
    @pytest.mark.parametrize(
        'target_fs, frame_len', [(48000, 2048), (44100, 1882)]
    )
    def test_new_geometry_same_core(
        self, mono_model, noise, target_fs, frame_len
    ):
        corpus = [noise(target_fs, seconds=0.25) for _ in range(2)]
        moved = transfer(mono_model, target_fs, corpus)
        assert moved.fs_hz == target_fs
        assert moved.geometry.frame_len == frame_len
        assert moved.geometry.num_bins == frame_len // 2 + 1
        assert moved.whitening.fs_hz == target_fs
        assert moved.whitening.num_bins == frame_len // 2 + 1
        assert moved.core_params.tobytes() == mono_model.core_params.tobytes()
        assert moved.frame_duration_s == mono_model.frame_duration_s

    def test_transferred_model_separates(self, mono_model, noise):
        moved = transfer(mono_model, 48000, [noise(48000, seconds=0.25)])
        mixture = noise(48000, seconds=0.25)
        foreground, background = separate(moved, mixture)
        np.testing.assert_allclose(
            foreground.data + background.data, mixture.data, atol=1e-12
        )

    def test_same_rate_transfer_changes_only_whitening(
        self, mono_model, noise
    ):
        moved = transfer(mono_model, 8000, [noise(8000, seconds=0.5)])
        assert moved.core_params.tobytes() == mono_model.core_params.tobytes()
        assert moved.geometry == mono_model.geometry
        assert moved.core_config == mono_model.core_config
        assert moved.alpha == mono_model.alpha
        assert not np.array_equal(
            moved.whitening.mean, mono_model.whitening.mean
        )

    def test_band_limited_consistency_across_rates(self, tiny_core, tones):
        source = build_model(
            frame_duration_s=Fraction(342, 8000),
            fs_hz=8000,
            channel_mode=ChannelMode.MONO,
            core_config=tiny_core,
            seed=7,
        )
        low = with_estimated_whitening(
            source, [tones(8000, seed) for seed in (1, 2, 3)]
        )
        high = transfer(source, 32000, [tones(32000, s) for s in (1, 2, 3)])
        assert high.geometry.frame_len == 4 * low.geometry.frame_len

        native, _ = separate(low, tones(8000, seed=9))
        moved, _ = separate(high, tones(32000, seed=9))
        back = resample(moved, 8000)
        edge = 200
        a = back.data[edge:-edge]
        b = native.data[edge:-edge]
        sdr = si_decompose(a, b, np.zeros_like(b)).si_sdr
        assert sdr > 20.0

    def test_empty_corpus_raises(self, mono_model):
        with pytest.raises(InvalidArgument):
            transfer(mono_model, 48000, [])

    def test_corpus_channel_mismatch_raises(self, mono_model, noise):
        with pytest.raises(InvalidArgument):
            transfer(mono_model, 48000, [noise(48000, 0.25, channels=2)])

    def test_estimated_whitening_keeps_rate(self, mono_model, noise):
        model = with_estimated_whitening(mono_model, [noise(8000)])
        assert model.fs_hz == 8000
        assert model.whitening.sample_count > 0
        assert not np.allclose(model.whitening.mean, 0.0)
