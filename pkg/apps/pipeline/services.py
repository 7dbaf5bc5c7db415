from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import numpy as np
import structlog

from apps.cnn.schemas import CoreConfig
from apps.cnn.services import core_forward, init_parameters
from apps.data.resampling import resample
from apps.features.schemas import WhiteningStats
from apps.features.services import apply_mask, estimate_whitening
from apps.filterbank.services import frame_geometry, synthesize
from apps.pipeline.graph import encode
from apps.pipeline.schemas import SeparationModel
from apps.pipeline.types import ChannelMode
from core.audio import AudioBuffer
from core.constants import DEFAULT_ALPHA, DEFAULT_FRAME_DURATION_S
from core.exceptions import InvalidArgument

logger = structlog.get_logger(__name__)


def build_model(
    frame_duration_s: Fraction | float | str = DEFAULT_FRAME_DURATION_S,
    fs_hz: int = 48000,
    channel_mode: ChannelMode = ChannelMode.STEREO,
    core_config: CoreConfig | None = None,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
) -> SeparationModel:
    """
    Новая модель: геометрия из длительности кадра, ядро инициализировано
    с сидом, выбеливание тождественное до оценки статистик.
    """
    channel_mode = ChannelMode(channel_mode)
    channels = 2 * channel_mode.channels
    if core_config is None:
        core_config = CoreConfig.for_channels(channel_mode.channels)
    if (
        core_config.in_channels != channels
        or core_config.mask_channels != channels
    ):
        raise InvalidArgument(
            f'Режим {channel_mode.value} требует {channels} каналов '
            f'признаков и масок, в конфигурации ядра '
            f'{core_config.in_channels}/{core_config.mask_channels}'
        )
    geometry = frame_geometry(frame_duration_s, fs_hz)
    params = init_parameters(core_config, seed).astype(np.float32)
    model = SeparationModel(
        frame_duration_s=geometry.frame_duration_s,
        fs_hz=fs_hz,
        alpha=alpha,
        channel_mode=channel_mode,
        core_config=core_config,
        core_params=params,
        whitening=WhiteningStats.identity(fs_hz, geometry.num_bins),
    )
    logger.info(
        'model_built',
        fs_hz=fs_hz,
        frame_len=geometry.frame_len,
        num_bins=geometry.num_bins,
        channel_mode=channel_mode.value,
        params=params.scalar_count(),
        seed=seed,
    )
    return model


def _check_input(model: SeparationModel, mixture: AudioBuffer) -> None:
    if mixture.fs_hz != model.fs_hz:
        raise InvalidArgument(
            f'Смесь при {mixture.fs_hz} Гц, модель работает при '
            f'{model.fs_hz} Гц; неявная передискретизация не выполняется'
        )
    if mixture.num_channels != model.num_channels:
        raise InvalidArgument(
            f'Модель ({model.channel_mode.value}) ожидает '
            f'{model.num_channels} каналов, получено {mixture.num_channels}'
        )


def estimate_foreground(
    model: SeparationModel, mixture: AudioBuffer
) -> AudioBuffer:
    _check_input(model, mixture)
    spec, features = encode(model, mixture)
    masks = core_forward(features, model.core_params, model.core_config)
    return synthesize(apply_mask(spec, masks))


def separate(
    model: SeparationModel, mixture: AudioBuffer
) -> tuple[AudioBuffer, AudioBuffer]:
    """(передний план, фон); фон равен точной разности смеси и оценки."""
    foreground = estimate_foreground(model, mixture)
    return foreground, mixture - foreground


def remix(
    foreground: AudioBuffer, background: AudioBuffer, background_db: float
) -> AudioBuffer:
    """Передний план плюс ослабленный (или усиленный) фон."""
    return foreground + background.with_data(
        background.data * 10.0 ** (background_db / 20.0)
    )


def separate_via_rate(
    model: SeparationModel, mixture: AudioBuffer
) -> tuple[AudioBuffer, AudioBuffer]:
    """
    Обработка на частоте модели: смесь передискретизируется к fs модели,
    оценка возвращается к исходной частоте; фон считается разностью на исходной
    частоте.
    """
    if mixture.fs_hz == model.fs_hz:
        return separate(model, mixture)
    low = resample(mixture, model.fs_hz)
    foreground_low = estimate_foreground(model, low)
    restored = resample(foreground_low, mixture.fs_hz).data
    data = np.zeros_like(mixture.data)
    count = min(restored.shape[0], mixture.num_samples)
    data[:count] = restored[:count]
    foreground = mixture.with_data(data)
    return foreground, mixture - foreground


def transfer(
    model: SeparationModel,
    target_fs: int,
    stats_corpus: Iterable[AudioBuffer],
) -> SeparationModel:
    """
    Перенос на новую частоту: новая геометрия и банки фильтров, параметры
    ядра копируются побитно, статистики выбеливания оцениваются заново
    по stats_corpus (один проход).
    """
    geometry = frame_geometry(model.frame_duration_s, target_fs)
    corpus = list(stats_corpus)
    if not corpus:
        raise InvalidArgument('Корпус для оценки статистик пуст')
    for mixture in corpus:
        if mixture.num_channels != model.num_channels:
            raise InvalidArgument(
                f'Корпус статистик: {mixture.num_channels} каналов, '
                f'модель {model.channel_mode.value}'
            )
    whitening = estimate_whitening(corpus, geometry, model.alpha)
    transferred = SeparationModel(
        frame_duration_s=model.frame_duration_s,
        fs_hz=target_fs,
        alpha=model.alpha,
        channel_mode=model.channel_mode,
        core_config=model.core_config,
        core_params=model.core_params.copy(),
        whitening=whitening,
    )
    logger.info(
        'transfer_done',
        source_fs=model.fs_hz,
        target_fs=target_fs,
        frame_len=geometry.frame_len,
        num_bins=geometry.num_bins,
        stats_items=len(corpus),
    )
    return transferred


def with_estimated_whitening(
    model: SeparationModel, corpus: Iterable[AudioBuffer]
) -> SeparationModel:
    """Та же модель со статистиками, оценёнными по смесям корпуса."""
    return transfer(model, model.fs_hz, corpus)
