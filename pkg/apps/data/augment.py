import numpy as np

from apps.data.schemas import AugmentConfig, Example
from core.audio import AudioBuffer


def db_to_gain(db: float) -> float:
    return float(10.0 ** (db / 20.0))


def _downmix(x: np.ndarray) -> np.ndarray:
    return np.repeat(x.mean(axis=1, keepdims=True), x.shape[1], axis=1)


def augment(
    example: Example, config: AugmentConfig, rng: np.random.Generator
) -> Example:
    """
    Случайное смещение начала, даунмикс в моно (только стерео), общее
    усиление и изменение соотношения речь/фон; смесь собирается заново
    как сумма дорожек. Случайные величины тянутся всегда, в одном
    порядке, независимо от числа каналов.
    """
    fs = example.fs_hz
    num_samples = example.mixture.num_samples
    max_offset = min(int(np.floor(config.max_offset_s * fs)), num_samples - 1)
    offset = int(rng.integers(0, max_offset + 1))
    downmix = rng.random() < config.mono_downmix_prob
    gain = db_to_gain(rng.uniform(*config.gain_db_range))
    ratio = db_to_gain(rng.uniform(*config.mix_ratio_db_range))

    foreground = example.foreground.data[offset:]
    background = example.background.data[offset:]
    if downmix and example.num_channels == 2:
        foreground = _downmix(foreground)
        background = _downmix(background)
    foreground = gain * foreground
    background = gain * ratio * background
    activity = (
        None if example.activity is None else example.activity[offset:]
    )
    return Example(
        mixture=AudioBuffer(data=foreground + background, fs_hz=fs),
        foreground=AudioBuffer(data=foreground, fs_hz=fs),
        background=AudioBuffer(data=background, fs_hz=fs),
        activity=activity,
    )
