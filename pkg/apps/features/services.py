from __future__ import annotations

from typing import Iterable

import numpy as np
import structlog

from apps.features.schemas import FeatureTensor, MaskTensor, WhiteningStats
from apps.filterbank.schemas import FrameGeometry, Spectrogram
from apps.filterbank.services import analyze
from core.audio import AudioBuffer
from core.constants import (
    DEFAULT_ALPHA,
    FEATURE_REFERENCE_FS,
    WHITENING_STD_FLOOR,
)
from core.exceptions import InvalidArgument, ShapeError
from utils.validators import require_same_rate

logger = structlog.get_logger(__name__)


def compress(spec: Spectrogram, alpha: float = DEFAULT_ALPHA) -> Spectrogram:
    """c → q·c, q = ln(alpha + |c|) / |c|; при |c| = 0 q = 1."""
    if alpha <= 0:
        raise InvalidArgument(f'alpha должно быть > 0, получено {alpha}')
    magnitude = np.abs(spec.data)
    q = np.ones_like(magnitude)
    nonzero = magnitude > 0
    q[nonzero] = np.log(alpha + magnitude[nonzero]) / magnitude[nonzero]
    return spec.with_data(spec.data * q)


def rate_normalize(spec: Spectrogram) -> Spectrogram:
    """
    Коэффициенты в масштабе анализа на FEATURE_REFERENCE_FS: сжатые
    признаки одного сигнала на разных частотах совпадают в общих бинах.
    """
    factor = FEATURE_REFERENCE_FS / spec.geometry.fs_hz
    return spec.with_data(spec.data * factor)


def stack_channels(spec: Spectrogram) -> FeatureTensor:
    frames, bins, channels = spec.data.shape
    out = np.empty((frames, bins, 2 * channels))
    out[..., 0::2] = spec.data.real
    out[..., 1::2] = spec.data.imag
    return FeatureTensor(data=out)


def unstack_channels(
    feat: FeatureTensor, geometry: FrameGeometry, signal_length: int
) -> Spectrogram:
    if feat.num_channels % 2:
        raise ShapeError('Число каналов признаков должно быть чётным')
    data = feat.data[..., 0::2] + 1j * feat.data[..., 1::2]
    return Spectrogram(
        data=data, geometry=geometry, signal_length=signal_length
    )


# ------------------------------ whitening ----------------------------------


class WhiteningAccumulator:
    """
    Потоковая оценка среднего и дисперсии по бинам (объединение моментов
    по Чану). Значения пулятся по кадрам, примерам и каналам признаков.
    """

    def __init__(self, num_bins: int) -> None:
        self.num_bins = num_bins
        self.count = 0
        self.mean = np.zeros(num_bins)
        self.m2 = np.zeros(num_bins)

    def update(self, values: np.ndarray) -> None:
        """values: [кадр][бин][канал признаков]."""
        if values.shape[1] != self.num_bins:
            raise ShapeError(
                f'Ожидалось {self.num_bins} бинов, получено {values.shape[1]}'
            )
        batch_count = values.shape[0] * values.shape[2]
        if batch_count == 0:
            return
        batch_mean = values.mean(axis=(0, 2))
        batch_m2 = ((values - batch_mean[None, :, None]) ** 2).sum(
            axis=(0, 2)
        )
        total = self.count + batch_count
        delta = batch_mean - self.mean
        self.mean = self.mean + delta * (batch_count / total)
        self.m2 = (
            self.m2 + batch_m2 + delta**2 * (self.count * batch_count / total)
        )
        self.count = total

    def finalize(self, fs_hz: int) -> WhiteningStats:
        if self.count == 0:
            raise InvalidArgument('Нет данных для оценки статистик')
        std = np.sqrt(self.m2 / self.count)
        return WhiteningStats(
            mean=self.mean.copy(),
            std=np.maximum(std, WHITENING_STD_FLOOR),
            fs_hz=fs_hz,
            num_bins=self.num_bins,
            sample_count=self.count,
        )


def spectral_features(spec: Spectrogram, alpha: float) -> FeatureTensor:
    """Признаки до выбеливания: нормировка по частоте, сжатие, стек."""
    return stack_channels(compress(rate_normalize(spec), alpha))


def compressed_features(
    signal: AudioBuffer, geometry: FrameGeometry, alpha: float
) -> FeatureTensor:
    return spectral_features(analyze(signal, geometry), alpha)


def estimate_whitening(
    corpus: Iterable[AudioBuffer], geometry: FrameGeometry, alpha: float
) -> WhiteningStats:
    """Один проход по смесям корпуса."""
    acc = WhiteningAccumulator(geometry.num_bins)
    items = 0
    for mixture in corpus:
        require_same_rate(mixture.fs_hz, geometry.fs_hz, 'estimate_whitening')
        acc.update(compressed_features(mixture, geometry, alpha).data)
        items += 1
    if items == 0:
        raise InvalidArgument('Корпус для оценки статистик пуст')
    stats = acc.finalize(geometry.fs_hz)
    logger.info(
        'whitening_estimated',
        fs_hz=geometry.fs_hz,
        num_bins=geometry.num_bins,
        items=items,
        sample_count=stats.sample_count,
    )
    return stats


def apply_whitening(
    feat: FeatureTensor, stats: WhiteningStats
) -> FeatureTensor:
    if feat.num_bins != stats.num_bins:
        raise ShapeError(
            f'Статистики для {stats.num_bins} бинов ({stats.fs_hz} Гц) '
            f'неприменимы к признакам с {feat.num_bins} бинами'
        )
    mean = stats.mean[None, :, None]
    std = stats.std[None, :, None]
    return FeatureTensor(data=(feat.data - mean) / std)


# -------------------------------- masks ------------------------------------


def complex_mask(mask: MaskTensor) -> np.ndarray:
    return mask.data[..., 0::2] + 1j * mask.data[..., 1::2]


def apply_mask(spec: Spectrogram, mask: MaskTensor) -> Spectrogram:
    """Маска применяется к несжатой спектрограмме, по маске на аудиоканал."""
    frames, bins, channels = spec.data.shape
    if mask.data.shape != (frames, bins, 2 * channels):
        raise ShapeError(
            f'Маска формы {mask.data.shape} не подходит к спектрограмме '
            f'{spec.data.shape}'
        )
    return spec.with_data(complex_mask(mask) * spec.data)


def mask_gradient(spec: Spectrogram, grad_out: np.ndarray) -> np.ndarray:
    """
    Градиент по каналам маски при фиксированной спектрограмме.
    grad_out: комплексный градиент по выходу apply_mask (Re → d/dRe,
    Im → d/dIm); результат в раскладке re/im.
    """
    g = grad_out * np.conj(spec.data)
    out = np.empty(spec.data.shape[:2] + (2 * spec.data.shape[2],))
    out[..., 0::2] = g.real
    out[..., 1::2] = g.imag
    return out
