from pathlib import Path

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from apps.data.types import Split
from core.audio import AudioBuffer, check_compatible
from core.constants import (
    AUGMENT_DOWNMIX_PROB,
    AUGMENT_GAIN_DB,
    AUGMENT_MAX_OFFSET_S,
    AUGMENT_MIX_RATIO_DB,
    FOREGROUND_MAX_HZ,
    NOISE_MAX_HZ,
    NOISE_MIN_HZ,
)
from utils.validators import (
    validate_db_range,
    validate_positive_rate,
    validate_probability,
)


class ForegroundParams(BaseModel):
    """Гармонический «голос» с формантной огибающей и паузами."""

    model_config = ConfigDict(frozen=True)

    f0_range_hz: tuple[float, float] = (100.0, 300.0)
    max_harmonic_hz: float = Field(FOREGROUND_MAX_HZ, gt=0)
    vibrato_depth: float = Field(0.02, ge=0, lt=0.5)
    vibrato_rate_hz: tuple[float, float] = (4.0, 7.0)
    formant_ranges_hz: tuple[tuple[float, float], ...] = (
        (400.0, 800.0),
        (1000.0, 1800.0),
        (2200.0, 2900.0),
    )
    formant_bandwidth_hz: float = Field(200.0, gt=0)
    segment_s: tuple[float, float] = (0.5, 1.5)
    pause_s: tuple[float, float] = (0.1, 0.5)
    ramp_s: float = Field(0.03, gt=0)
    level_rms: float = Field(0.1, gt=0)

    @model_validator(mode='after')
    def check_segments(self) -> 'ForegroundParams':
        if self.segment_s[0] < 2 * self.ramp_s:
            raise ValueError('сегмент речи короче двух рамп')
        return self


class BackgroundParams(BaseModel):
    """Окрашенный шум плюс тоны с амплитудной модуляцией."""

    model_config = ConfigDict(frozen=True)

    slope_db_per_octave: float = -3.0
    min_hz: float = Field(NOISE_MIN_HZ, gt=0)
    max_hz: float = Field(NOISE_MAX_HZ, gt=0)
    num_tones: int = Field(3, ge=0)
    tone_range_hz: tuple[float, float] = (150.0, 6000.0)
    am_rate_hz: tuple[float, float] = (0.5, 4.0)
    am_depth: float = Field(0.8, ge=0, le=1)
    tone_level_db: float = -6.0
    level_rms: float = Field(0.1, gt=0)


class SynthSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0)
    duration_s: float = Field(4.0, gt=0)
    fs_hz: int
    channels: int = Field(1, ge=1, le=2)
    mix_snr_db: float = 0.0
    foreground: ForegroundParams = ForegroundParams()
    background: BackgroundParams = BackgroundParams()

    @field_validator('fs_hz')
    @classmethod
    def validate_fs(cls, v: int) -> int:
        return validate_positive_rate(v)


class Example(BaseModel):
    """Тройка дорожек: смесь, целевой (передний) план и фон."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mixture: AudioBuffer
    foreground: AudioBuffer
    background: AudioBuffer
    activity: np.ndarray | None = None

    @model_validator(mode='after')
    def check_stems(self) -> 'Example':
        check_compatible(self.mixture, self.foreground)
        check_compatible(self.mixture, self.background)
        return self

    @property
    def fs_hz(self) -> int:
        return self.mixture.fs_hz

    @property
    def num_channels(self) -> int:
        return self.mixture.num_channels


class AugmentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_offset_s: float = Field(AUGMENT_MAX_OFFSET_S, ge=0)
    mono_downmix_prob: float = AUGMENT_DOWNMIX_PROB
    gain_db_range: tuple[float, float] = AUGMENT_GAIN_DB
    mix_ratio_db_range: tuple[float, float] = AUGMENT_MIX_RATIO_DB

    @field_validator('mono_downmix_prob')
    @classmethod
    def validate_prob(cls, v: float) -> float:
        return validate_probability(v)

    @field_validator('gain_db_range', 'mix_ratio_db_range')
    @classmethod
    def validate_ranges(cls, v: tuple[float, float]) -> tuple[float, float]:
        return validate_db_range(v)

    @classmethod
    def disabled(cls) -> 'AugmentConfig':
        return cls(
            max_offset_s=0.0,
            mono_downmix_prob=0.0,
            gain_db_range=(0.0, 0.0),
            mix_ratio_db_range=(0.0, 0.0),
        )


class CorpusConfig(BaseModel):
    """Размеры и параметры синтетического корпуса (train/val/test)."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0)
    num_train: int = Field(64, ge=0)
    num_val: int = Field(16, ge=0)
    num_test: int = Field(16, ge=0)
    duration_s: float = Field(4.0, gt=0)
    channels: int = Field(1, ge=1, le=2)
    mix_snr_db_range: tuple[float, float] = (-3.0, 3.0)
    foreground: ForegroundParams = ForegroundParams()
    background: BackgroundParams = BackgroundParams()

    @field_validator('mix_snr_db_range')
    @classmethod
    def validate_snr(cls, v: tuple[float, float]) -> tuple[float, float]:
        return validate_db_range(v)

    def size(self, split: Split) -> int:
        return {
            Split.TRAIN: self.num_train,
            Split.VAL: self.num_val,
            Split.TEST: self.num_test,
        }[split]


class ManifestItem(BaseModel):
    split: Split
    index: int = Field(..., ge=0)
    seed: int = Field(..., ge=0)
    mix_snr_db: float
    mixture: Path
    foreground: Path
    background: Path


class CorpusManifest(BaseModel):
    """JSON-описание корпуса на диске; пути относительно manifest.json."""

    fs_hz: int
    channels: int
    duration_s: float
    items: list[ManifestItem] = []

    def for_split(self, split: Split) -> list[ManifestItem]:
        return [item for item in self.items if item.split == split]
