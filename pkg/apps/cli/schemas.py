from fractions import Fraction
from pathlib import Path

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from apps.cnn.schemas import CoreConfig
from apps.data.schemas import AugmentConfig, CorpusConfig
from apps.metrics.schemas import MetricReport
from apps.pipeline.types import ChannelMode
from core.constants import (
    DEFAULT_ALPHA,
    DEFAULT_FRAME_DURATION_S,
    DEFAULT_HIDDEN_BLOCKS,
    DEFAULT_HIDDEN_FILTERS,
    DEFAULT_MAX_EPOCHS,
    DEFAULT_PATIENCE,
)
from utils.validators import validate_fraction_value, validate_positive_rate


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frame_duration_s: Fraction = DEFAULT_FRAME_DURATION_S
    channel_mode: ChannelMode = ChannelMode.MONO
    num_hidden_blocks: int = Field(DEFAULT_HIDDEN_BLOCKS, ge=1)
    hidden_filters: int = Field(DEFAULT_HIDDEN_FILTERS, ge=1)
    alpha: float = Field(DEFAULT_ALPHA, gt=0)

    @field_validator('frame_duration_s', mode='before')
    @classmethod
    def validate_duration(cls, v: object) -> Fraction:
        return validate_fraction_value(v)

    @field_serializer('frame_duration_s')
    def serialize_duration(self, v: Fraction) -> str:
        return str(v)

    def core_config(self) -> CoreConfig:
        return CoreConfig.for_channels(
            self.channel_mode.channels,
            num_hidden_blocks=self.num_hidden_blocks,
            hidden_filters=self.hidden_filters,
        )


class TrainingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    patience: int = Field(DEFAULT_PATIENCE, ge=1)
    max_epochs: int = Field(DEFAULT_MAX_EPOCHS, ge=1)
    low_fs_hz: int = 8000
    high_fs_hz: int = 48000
    extra_transfer_fs_hz: list[int] = [44100]
    stats_items: int | None = Field(None, ge=1)
    augment: AugmentConfig = AugmentConfig()

    @field_validator('low_fs_hz', 'high_fs_hz')
    @classmethod
    def validate_fs(cls, v: int) -> int:
        return validate_positive_rate(v)

    @field_validator('extra_transfer_fs_hz')
    @classmethod
    def validate_extra(cls, v: list[int]) -> list[int]:
        return [validate_positive_rate(fs) for fs in v]


class ExperimentConfig(BaseModel):
    """Один JSON-документ на полный прогон обучение → перенос → оценка."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0)
    output_dir: Path | None = None
    corpus: CorpusConfig = CorpusConfig()
    model: ModelConfig = ModelConfig()
    training: TrainingConfig = TrainingConfig()

    @model_validator(mode='after')
    def check_channels(self) -> 'ExperimentConfig':
        if self.corpus.channels != self.model.channel_mode.channels:
            raise ValueError(
                f'Корпус с {self.corpus.channels} каналами не подходит '
                f'для режима {self.model.channel_mode.value}'
            )
        return self

    @classmethod
    def load(cls, path: Path | str) -> 'ExperimentConfig':
        return cls.model_validate_json(Path(path).read_text(encoding='utf-8'))


# ------------------------------ reports ------------------------------------


class VariantResult(BaseModel):
    name: str
    train_fs_hz: int
    eval_fs_hz: int
    report: MetricReport


class ExperimentReport(BaseModel):
    """Детерминированная часть: без времени выполнения."""

    seed: int
    config: ExperimentConfig
    training: dict[str, dict]
    variants: list[VariantResult]

    def variant(self, name: str) -> VariantResult:
        return next(v for v in self.variants if v.name == name)


class TimingReport(BaseModel):
    low_fs_hz: int
    high_fs_hz: int
    low_epoch_s: float
    high_epoch_s: float

    @property
    def speed_ratio(self) -> float:
        if self.low_epoch_s == 0:
            return 0.0
        return self.high_epoch_s / self.low_epoch_s
