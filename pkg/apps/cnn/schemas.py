from __future__ import annotations

from typing import Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.cnn.types import (
    BLOCK_TENSORS,
    MASK_OFFSET,
    MASK_SCALE,
    OUTPUT_BLOCK,
    Activation,
    BlockParams,
    BlockSpec,
)
from core.constants import (
    ADADELTA_EPS,
    ADADELTA_RHO,
    DEFAULT_HIDDEN_BLOCKS,
    DEFAULT_HIDDEN_FILTERS,
    KERNEL_FREQ,
    KERNEL_TIME,
)
from core.exceptions import ShapeError


class CoreConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_hidden_blocks: int = Field(DEFAULT_HIDDEN_BLOCKS, ge=1)
    hidden_filters: int = Field(DEFAULT_HIDDEN_FILTERS, ge=1)
    kernel_time: int = Field(KERNEL_TIME, ge=1)
    kernel_freq: int = Field(KERNEL_FREQ, ge=1)
    in_channels: int = Field(4, ge=1)
    mask_channels: int = Field(4, ge=1)

    @model_validator(mode='after')
    def check_kernel(self) -> 'CoreConfig':
        if self.kernel_time % 2 == 0 or self.kernel_freq % 2 == 0:
            raise ValueError('размеры ядра должны быть нечётными')
        return self

    @classmethod
    def for_channels(cls, audio_channels: int, **kwargs) -> 'CoreConfig':
        return cls(
            in_channels=2 * audio_channels,
            mask_channels=2 * audio_channels,
            **kwargs,
        )

    def block_plan(self) -> list[BlockSpec]:
        """Скрытые блоки (ReLU) и выходной блок (tanh), по порядку."""
        plan = []
        channels = self.in_channels
        for i in range(1, self.num_hidden_blocks + 1):
            plan.append(
                BlockSpec(
                    f'block{i:02d}',
                    channels,
                    self.hidden_filters,
                    Activation.RELU,
                )
            )
            channels = self.hidden_filters
        plan.append(
            BlockSpec(
                OUTPUT_BLOCK, channels, self.mask_channels, Activation.TANH
            )
        )
        return plan

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        """Имена и формы обучаемых тензоров в порядке сериализации."""
        shapes: dict[str, tuple[int, ...]] = {}
        for spec in self.block_plan():
            out, inp = spec.out_channels, spec.in_channels
            shapes[f'{spec.name}.weight'] = (
                out,
                inp,
                self.kernel_time,
                self.kernel_freq,
            )
            shapes[f'{spec.name}.bias'] = (out,)
            shapes[f'{spec.name}.norm_gain'] = (out,)
            shapes[f'{spec.name}.norm_bias'] = (out,)
        shapes[MASK_SCALE] = ()
        shapes[MASK_OFFSET] = ()
        return shapes


class CoreParameters:
    """
    Упорядоченный набор именованных тензоров ядра. Порядок фиксирован
    (CoreConfig.tensor_shapes) и совпадает с порядком в файле модели.
    """

    def __init__(self, tensors: dict[str, np.ndarray]) -> None:
        self.tensors = dict(tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] = value

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def names(self) -> list[str]:
        return list(self.tensors)

    def block(self, name: str) -> BlockParams:
        return BlockParams(
            *(self.tensors[f'{name}.{part}'] for part in BLOCK_TENSORS)
        )

    @property
    def scale(self) -> float:
        return float(self.tensors[MASK_SCALE])

    @property
    def offset(self) -> float:
        return float(self.tensors[MASK_OFFSET])

    def scalar_count(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def copy(self) -> 'CoreParameters':
        return CoreParameters({k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype) -> 'CoreParameters':
        return CoreParameters(
            {k: np.asarray(v, dtype=dtype) for k, v in self.tensors.items()}
        )

    def zeros_like(self) -> 'CoreParameters':
        return CoreParameters(
            {
                k: np.zeros(v.shape, dtype=np.float64)
                for k, v in self.tensors.items()
            }
        )

    def check_layout(self, config: CoreConfig) -> None:
        shapes = config.tensor_shapes()
        if list(shapes) != self.names():
            raise ShapeError('Порядок тензоров не соответствует конфигурации')
        for name, shape in shapes.items():
            if self.tensors[name].shape != shape:
                raise ShapeError(
                    f'Тензор {name}: форма {self.tensors[name].shape}, '
                    f'ожидалась {shape}'
                )

    def tobytes(self) -> bytes:
        return b''.join(
            np.ascontiguousarray(t).tobytes() for t in self.tensors.values()
        )


class AdadeltaState:
    """E[g²] и E[Δx²] на каждый параметр; гиперпараметры rho, eps."""

    def __init__(
        self,
        square_avg: CoreParameters,
        acc_delta: CoreParameters,
        rho: float = ADADELTA_RHO,
        eps: float = ADADELTA_EPS,
        step: int = 0,
    ) -> None:
        self.square_avg = square_avg
        self.acc_delta = acc_delta
        self.rho = rho
        self.eps = eps
        self.step = step

    @classmethod
    def zeros(
        cls,
        params: CoreParameters,
        rho: float = ADADELTA_RHO,
        eps: float = ADADELTA_EPS,
    ) -> 'AdadeltaState':
        return cls(params.zeros_like(), params.zeros_like(), rho, eps)
