from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog

from apps.cnn.layers import BlockCache, conv_block_backward, conv_block_forward
from apps.cnn.schemas import CoreConfig, CoreParameters
from apps.cnn.types import BLOCK_TENSORS, MASK_OFFSET, MASK_SCALE
from apps.features.schemas import FeatureTensor, MaskTensor
from core.exceptions import ShapeError

logger = structlog.get_logger(__name__)


def param_count(config: CoreConfig) -> int:
    """kt·kf·in·out + 3·out на блок и ещё 2 скаляра (scale, offset)."""
    kernel = config.kernel_time * config.kernel_freq
    total = 2
    for spec in config.block_plan():
        total += kernel * spec.in_channels * spec.out_channels
        total += 3 * spec.out_channels
    return total


def init_parameters(config: CoreConfig, seed: int) -> CoreParameters:
    """
    He-uniform для весов свёртки, нулевые смещения, единичное усиление
    нормировки, scale = 1, offset = 0.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    kernel = config.kernel_time * config.kernel_freq
    for spec in config.block_plan():
        limit = np.sqrt(6.0 / (kernel * spec.in_channels))
        shape = (
            spec.out_channels,
            spec.in_channels,
            config.kernel_time,
            config.kernel_freq,
        )
        tensors[f'{spec.name}.weight'] = rng.uniform(-limit, limit, shape)
        tensors[f'{spec.name}.bias'] = np.zeros(spec.out_channels)
        tensors[f'{spec.name}.norm_gain'] = np.ones(spec.out_channels)
        tensors[f'{spec.name}.norm_bias'] = np.zeros(spec.out_channels)
    tensors[MASK_SCALE] = np.array(1.0)
    tensors[MASK_OFFSET] = np.array(0.0)
    params = CoreParameters(tensors)
    logger.debug(
        'core_initialized',
        seed=seed,
        blocks=config.num_hidden_blocks + 1,
        params=params.scalar_count(),
    )
    return params


def scale_masks(y: np.ndarray, scale: float, offset: float) -> MaskTensor:
    return MaskTensor(data=offset + scale * y)


@dataclass
class CoreCache:
    blocks: list[BlockCache]
    y: np.ndarray


class CoreNetwork:
    """Сверточное ядро: признаки → маски той же формы."""

    def __init__(self, config: CoreConfig, params: CoreParameters) -> None:
        params.check_layout(config)
        self.config = config
        self.params = params

    def _check_input(self, features: FeatureTensor) -> None:
        if features.data.ndim != 3:
            raise ShapeError('Ожидались признаки формы [кадр][бин][канал]')
        if features.num_channels != self.config.in_channels:
            raise ShapeError(
                f'Ядро ожидает {self.config.in_channels} каналов признаков, '
                f'получено {features.num_channels}'
            )

    def forward(
        self, features: FeatureTensor
    ) -> tuple[MaskTensor, CoreCache]:
        self._check_input(features)
        x = features.data
        caches = []
        for spec in self.config.block_plan():
            x, cache = conv_block_forward(
                x, self.params.block(spec.name), spec.activation
            )
            caches.append(cache)
        masks = scale_masks(x, self.params.scale, self.params.offset)
        return masks, CoreCache(caches, x)

    def __call__(self, features: FeatureTensor) -> MaskTensor:
        masks, _ = self.forward(features)
        return masks

    def backward(
        self, cache: CoreCache, d_masks: np.ndarray
    ) -> tuple[np.ndarray, CoreParameters]:
        """
        d_masks: градиент по маскам. Возвращает градиент по признакам и
        градиенты по всем параметрам (в том же порядке имён).
        """
        grads: dict[str, np.ndarray] = {}
        d_x = d_masks * self.params.scale
        plan = self.config.block_plan()
        for spec, block_cache in zip(reversed(plan), reversed(cache.blocks)):
            d_x, d_block = conv_block_backward(
                d_x,
                self.params.block(spec.name),
                spec.activation,
                block_cache,
            )
            for part, value in zip(BLOCK_TENSORS, d_block):
                grads[f'{spec.name}.{part}'] = value
        grads[MASK_SCALE] = np.array(float((d_masks * cache.y).sum()))
        grads[MASK_OFFSET] = np.array(float(d_masks.sum()))
        ordered = {name: grads[name] for name in self.params.names()}
        return d_x, CoreParameters(ordered)


def core_forward(
    features: FeatureTensor, params: CoreParameters, config: CoreConfig
) -> MaskTensor:
    return CoreNetwork(config, params)(features)

