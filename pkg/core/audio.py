import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.exceptions import InvalidArgument


class AudioBuffer(BaseModel):
    """
    Многоканальный сигнал во временной области.
    data: [отсчёт][канал], float64; fs_hz: частота дискретизации.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray
    fs_hz: int = Field(..., gt=0)

    @field_validator('data', mode='before')
    @classmethod
    def validate_data(cls, v: object) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError('ожидался массив формы [отсчёт][канал]')
        return arr

    @property
    def num_samples(self) -> int:
        return int(self.data.shape[0])

    @property
    def num_channels(self) -> int:
        return int(self.data.shape[1])

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.fs_hz

    def with_data(self, data: np.ndarray) -> 'AudioBuffer':
        return AudioBuffer(data=data, fs_hz=self.fs_hz)

    def flatten(self) -> np.ndarray:
        """Каналы подряд (конкатенация), как принято для SI-метрик."""
        return self.data.T.reshape(-1)

    def __add__(self, other: 'AudioBuffer') -> 'AudioBuffer':
        check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other: 'AudioBuffer') -> 'AudioBuffer':
        check_compatible(self, other)
        return self.with_data(self.data - other.data)


def check_compatible(a: AudioBuffer, b: AudioBuffer) -> None:
    if a.fs_hz != b.fs_hz:
        raise InvalidArgument(
            f'Частоты дискретизации не совпадают: {a.fs_hz} и {b.fs_hz} Гц'
        )
    if a.data.shape != b.data.shape:
        raise InvalidArgument(
            f'Формы сигналов не совпадают: {a.data.shape} и {b.data.shape}'
        )
