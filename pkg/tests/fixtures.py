import numpy as np
import pytest

from apps.cnn.schemas import CoreConfig
from apps.data.repository import CorpusRepository
from apps.data.schemas import (
    CorpusConfig,
    CorpusManifest,
    Example,
    SynthSpec,
)
from apps.data.synth import generate_corpus, item_specs, synth_example
from apps.data.types import Split
from apps.pipeline.services import build_model
from apps.pipeline.types import ChannelMode
from core.audio import AudioBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise(rng):
    """Фабрика белого шума: noise(fs_hz, seconds=1.0, channels=1)."""

    def make(fs_hz: int, seconds: float = 1.0, channels: int = 1):
        data = rng.standard_normal((int(round(fs_hz * seconds)), channels))
        return AudioBuffer(data=0.1 * data, fs_hz=fs_hz)

    return make


@pytest.fixture
def tiny_core():
    """Два скрытых блока по 4 фильтра, моно."""
    return CoreConfig.for_channels(1, num_hidden_blocks=2, hidden_filters=4)


@pytest.fixture
def mono_model(tiny_core):
    return build_model(
        fs_hz=8000,
        channel_mode=ChannelMode.MONO,
        core_config=tiny_core,
        seed=7,
    )


@pytest.fixture
def stereo_model():
    return build_model(
        fs_hz=8000,
        channel_mode=ChannelMode.STEREO,
        core_config=CoreConfig.for_channels(
            2, num_hidden_blocks=1, hidden_filters=4
        ),
        seed=7,
    )


@pytest.fixture
def short_example() -> Example:
    return synth_example(
        SynthSpec(seed=11, duration_s=1.0, fs_hz=8000, mix_snr_db=0.0)
    )


@pytest.fixture
def corpus_dir(tmp_path):
    """Маленький моно-корпус 8 кГц на диске: 2 train, 1 val, 2 test."""
    config = CorpusConfig(
        seed=3, num_train=2, num_val=1, num_test=2, duration_s=1.0
    )
    repo = CorpusRepository(tmp_path / 'corpus')
    items = []
    for split in Split:
        examples = generate_corpus(config, 8000, split)
        items += repo.write_split(
            split, examples, item_specs(config, 8000, split)
        )
    repo.save_manifest(
        CorpusManifest(
            fs_hz=8000, channels=1, duration_s=1.0, items=items
        )
    )
    return repo.root


@pytest.fixture
def tones():
    """
    Фабрика сигналов с полосой ниже 2.5 кГц: tones(fs_hz, seed, seconds).
    Один и тот же seed даёт один непрерывный сигнал на любой частоте.
    Тоны разнесены примерно на 300 Гц и медленно модулированы.
    """

    def make(fs_hz: int, seed: int = 0, seconds: float = 0.5):
        local = np.random.default_rng(seed)
        freqs = np.arange(150.0, 2500.0, 300.0) + local.uniform(0, 50, 8)
        amps = local.uniform(0.02, 0.1, 8)
        phases = local.uniform(0, 2 * np.pi, 8)
        rate = local.uniform(1.0, 4.0)
        t = np.arange(int(round(fs_hz * seconds))) / fs_hz
        envelope = 1.0 + 0.5 * np.sin(2 * np.pi * rate * t)
        data = envelope * sum(
            a * np.cos(2 * np.pi * f * t + p)
            for f, a, p in zip(freqs, amps, phases)
        )
        return AudioBuffer(data=data, fs_hz=fs_hz)

    return make
