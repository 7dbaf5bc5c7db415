from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from utils.validators import validate_fraction_value


class FrameGeometry(BaseModel):
    """
    Длительность кадра в секундах, пересчитанная в отсчёты для конкретной
    частоты дискретизации. Шаг равен половине кадра.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frame_duration_s: Fraction
    fs_hz: int = Field(..., gt=0)
    frame_len: int = Field(..., ge=4)
    hop_len: int
    num_bins: int

    @field_validator('frame_duration_s', mode='before')
    @classmethod
    def validate_duration(cls, v: object) -> Fraction:
        return validate_fraction_value(v)

    @property
    def hop_fraction(self) -> Fraction:
        return Fraction(self.hop_len, self.frame_len)

    @property
    def bin_spacing_hz(self) -> float:
        return self.fs_hz / self.frame_len

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.bin_spacing_hz


class AnalysisFilterBank(BaseModel):
    """
    Фильтры анализа: cos- и (-sin)-ветви на каждый бин, уже умноженные на
    синусное окно. Формы [num_bins][frame_len].
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: FrameGeometry
    window: np.ndarray
    cos_filters: np.ndarray
    sin_filters: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        """[frame_len][2·num_bins]: сначала cos-ветви, затем sin-ветви."""
        return np.concatenate([self.cos_filters, self.sin_filters]).T


class SynthesisFilterBank(BaseModel):
    """
    Фильтры синтеза: оконный базис обратного ДПФ с весами 1/N (DC, Найквист)
    и 2/N (внутренние бины). Формы [num_bins][frame_len].
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: FrameGeometry
    window: np.ndarray
    real_filters: np.ndarray
    imag_filters: np.ndarray


class Spectrogram(BaseModel):
    """Комплексное представление [кадр][бин][аудиоканал]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray
    geometry: FrameGeometry
    signal_length: int = Field(..., ge=1)

    @property
    def num_frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def num_channels(self) -> int:
        return int(self.data.shape[2])

    def with_data(self, data: np.ndarray) -> 'Spectrogram':
        return Spectrogram(
            data=data, geometry=self.geometry, signal_length=self.signal_length
        )
