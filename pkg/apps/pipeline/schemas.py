from fractions import Fraction

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from apps.cnn.schemas import CoreConfig, CoreParameters
from apps.features.schemas import WhiteningStats
from apps.filterbank.schemas import FrameGeometry
from apps.filterbank.services import frame_geometry
from apps.pipeline.types import ChannelMode, StopReason
from core.constants import DEFAULT_ALPHA
from utils.validators import validate_fraction_value


class SeparationModel(BaseModel):
    """
    Полная модель разделения. Геометрия кадра выводится из длительности
    кадра и частоты дискретизации; параметры ядра от частоты не зависят.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frame_duration_s: Fraction
    fs_hz: int = Field(..., gt=0)
    alpha: float = Field(DEFAULT_ALPHA, gt=0)
    channel_mode: ChannelMode
    core_config: CoreConfig
    core_params: CoreParameters
    whitening: WhiteningStats

    @field_validator('frame_duration_s', mode='before')
    @classmethod
    def validate_duration(cls, v: object) -> Fraction:
        return validate_fraction_value(v)

    @model_validator(mode='after')
    def check_consistency(self) -> 'SeparationModel':
        geometry = self.geometry
        if self.whitening.num_bins != geometry.num_bins:
            raise ValueError(
                f'Статистики на {self.whitening.num_bins} бинов, '
                f'геометрия даёт {geometry.num_bins}'
            )
        if self.whitening.fs_hz != self.fs_hz:
            raise ValueError(
                f'Статистики оценены при {self.whitening.fs_hz} Гц, '
                f'модель работает при {self.fs_hz} Гц'
            )
        expected = 2 * self.channel_mode.channels
        if (
            self.core_config.in_channels != expected
            or self.core_config.mask_channels != expected
        ):
            raise ValueError(
                f'Режим {self.channel_mode.value} требует {expected} '
                f'каналов признаков и масок'
            )
        self.core_params.check_layout(self.core_config)
        return self

    @property
    def geometry(self) -> FrameGeometry:
        return frame_geometry(self.frame_duration_s, self.fs_hz)

    @property
    def num_channels(self) -> int:
        return self.channel_mode.channels

    def with_params(self, params: CoreParameters) -> 'SeparationModel':
        return self.model_copy(update={'core_params': params})


class EpochRecord(BaseModel):
    epoch: int = Field(..., ge=1)
    train_loss: float
    val_loss: float
    seconds: float = Field(..., ge=0)


class TrainReport(BaseModel):
    epochs: list[EpochRecord] = []
    best_epoch: int = 0
    best_val_loss: float = float('inf')
    stop_reason: StopReason = StopReason.MAX_EPOCHS

    @property
    def mean_epoch_seconds(self) -> float:
        if not self.epochs:
            return 0.0
        return sum(e.seconds for e in self.epochs) / len(self.epochs)

    def deterministic_view(self) -> dict:
        """Всё, кроме времени: сравнивается в проверках воспроизводимости."""
        return self.model_dump(
            mode='json', exclude={'epochs': {'__all__': {'seconds'}}}
        )
