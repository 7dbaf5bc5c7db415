import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.constants import WHITENING_STD_FLOOR


class FeatureTensor(BaseModel):
    """
    Действительные признаки [кадр][бин][канал признаков].
    Порядок каналов: (ch0_re, ch0_im, ch1_re, ch1_im, ...).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray

    @property
    def num_bins(self) -> int:
        return int(self.data.shape[1])

    @property
    def num_channels(self) -> int:
        return int(self.data.shape[2])


class MaskTensor(FeatureTensor):
    """Маски в той же раскладке re/im, что и FeatureTensor."""


class WhiteningStats(BaseModel):
    """Поканально-общие (по бинам) среднее и СКО сжатых признаков."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    std: np.ndarray
    fs_hz: int = Field(..., gt=0)
    num_bins: int = Field(..., ge=1)
    sample_count: int = Field(0, ge=0)

    @model_validator(mode='after')
    def check_shapes(self) -> 'WhiteningStats':
        if self.mean.shape != (self.num_bins,) or self.std.shape != (
            self.num_bins,
        ):
            raise ValueError('mean/std должны иметь форму [num_bins]')
        if np.any(self.std < WHITENING_STD_FLOOR):
            raise ValueError('std ниже допустимого минимума 1e-8')
        return self

    @classmethod
    def identity(cls, fs_hz: int, num_bins: int) -> 'WhiteningStats':
        """Статистика «не оценена»: среднее 0, СКО 1."""
        return cls(
            mean=np.zeros(num_bins),
            std=np.ones(num_bins),
            fs_hz=fs_hz,
            num_bins=num_bins,
            sample_count=0,
        )
