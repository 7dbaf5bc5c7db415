import numpy as np
import pytest

from apps.data.augment import augment, db_to_gain
from apps.data.schemas import AugmentConfig, Example
from core.audio import AudioBuffer


def _stereo_example(num_samples: int = 16) -> Example:
    fg = np.tile([1.0, -1.0], (num_samples, 1))
    bg = np.tile([0.5, -0.25], (num_samples, 1))
    return Example(
        mixture=AudioBuffer(data=fg + bg, fs_hz=8000),
        foreground=AudioBuffer(data=fg, fs_hz=8000),
        background=AudioBuffer(data=bg, fs_hz=8000),
    )


@pytest.mark.services
class TestAugment:
    def test_offset_bounded(self, short_example, rng):
        for _ in range(50):
            out = augment(short_example, AugmentConfig(), rng)
            assert 8000 - 80 <= out.mixture.num_samples <= 8000

    def test_fixed_gain(self, short_example, rng):
        config = AugmentConfig(
            max_offset_s=0.0,
            gain_db_range=(6.0, 6.0),
            mix_ratio_db_range=(0.0, 0.0),
        )
        out = augment(short_example, config, rng)
        assert db_to_gain(6.0) == pytest.approx(1.99526, abs=1e-5)
        expected = 1.99526 * short_example.foreground.data
        np.testing.assert_allclose(out.foreground.data, expected, rtol=1e-5)

    def test_mix_ratio_scales_background_only(self, short_example, rng):
        config = AugmentConfig(
            max_offset_s=0.0,
            gain_db_range=(0.0, 0.0),
            mix_ratio_db_range=(-6.0, -6.0),
        )
        out = augment(short_example, config, rng)
        np.testing.assert_array_equal(
            out.foreground.data, short_example.foreground.data
        )
        np.testing.assert_allclose(
            out.background.data,
            db_to_gain(-6.0) * short_example.background.data,
        )
        np.testing.assert_allclose(
            out.mixture.data, out.foreground.data + out.background.data
        )

    def test_downmix_frequency(self):
        rng = np.random.default_rng(0)
        example = _stereo_example()
        trials = 10_000
        downmixed = 0
        for _ in range(trials):
            out = augment(example, AugmentConfig(), rng)
            data = out.foreground.data
            downmixed += bool(np.allclose(data[:, 0], data[:, 1]))
        assert downmixed / trials == pytest.approx(1 / 3, abs=0.02)

    def test_disabled_is_identity(self, short_example, rng):
        out = augment(short_example, AugmentConfig.disabled(), rng)
        np.testing.assert_array_equal(
            out.mixture.data, short_example.mixture.data
        )

    def test_mono_draws_same_randomness(self, short_example):
        stereo = _stereo_example(8000)
        mono_out = augment(
            short_example, AugmentConfig(), np.random.default_rng(3)
        )
        stereo_out = augment(
            stereo, AugmentConfig(), np.random.default_rng(3)
        )
        assert mono_out.mixture.num_samples == stereo_out.mixture.num_samples
