from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import structlog
from numpy.lib.stride_tricks import sliding_window_view

from apps.filterbank.schemas import (
    AnalysisFilterBank,
    FrameGeometry,
    Spectrogram,
    SynthesisFilterBank,
)
from core.audio import AudioBuffer
from core.constants import HOP_FRACTION, MIN_FRAME_LEN
from core.exceptions import GeometryTooSmall, InvalidArgument
from utils.validators import require_same_rate, validate_fraction_value

logger = structlog.get_logger(__name__)


# ------------------------------ geometry -----------------------------------


def frame_geometry(
    frame_duration_s: Fraction | float | str, fs_hz: int
) -> FrameGeometry:
    """
    Длина кадра: ближайшее чётное к frame_duration_s · fs_hz
    (половинки округляются вверх), шаг равен половине кадра.
    """
    duration = validate_fraction_value(frame_duration_s)
    if duration <= 0 or fs_hz <= 0:
        raise InvalidArgument(
            'Длительность кадра и частота дискретизации должны быть '
            'положительными'
        )
    exact = duration * Fraction(fs_hz)
    frame_len = 2 * math.floor(exact / 2 + Fraction(1, 2))
    if frame_len < MIN_FRAME_LEN:
        raise GeometryTooSmall(frame_len)
    return FrameGeometry(
        frame_duration_s=duration,
        fs_hz=fs_hz,
        frame_len=frame_len,
        hop_len=int(frame_len * HOP_FRACTION),
        num_bins=frame_len // 2 + 1,
    )


def num_frames_for(num_samples: int, geometry: FrameGeometry) -> int:
    """Каждый исходный отсчёт покрыт двумя кадрами."""
    return -(-num_samples // geometry.hop_len) + 1


# ----------------------------- filter banks --------------------------------


def sine_window(frame_len: int) -> np.ndarray:
    n = np.arange(frame_len)
    return np.sin(np.pi * (n + 0.5) / frame_len)


@lru_cache(maxsize=16)
def design_filterbanks(
    geometry: FrameGeometry,
) -> tuple[AnalysisFilterBank, SynthesisFilterBank]:
    n_len = geometry.frame_len
    window = sine_window(n_len)
    k = np.arange(geometry.num_bins)
    n = np.arange(n_len)
    # k·n берётся по модулю N в целых, чтобы фаза не теряла точность
    phase = 2.0 * np.pi * ((k[:, None] * n[None, :]) % n_len) / n_len
    cos_filters = window * np.cos(phase)
    sin_filters = -window * np.sin(phase)
    cos_filters[0] = window
    sin_filters[0] = 0.0
    sin_filters[-1] = 0.0

    weights = np.full(geometry.num_bins, 2.0 / n_len)
    weights[0] = 1.0 / n_len
    weights[-1] = 1.0 / n_len

    analysis = AnalysisFilterBank(
        geometry=geometry,
        window=window,
        cos_filters=cos_filters,
        sin_filters=sin_filters,
    )
    synthesis = SynthesisFilterBank(
        geometry=geometry,
        window=window,
        real_filters=cos_filters * weights[:, None],
        imag_filters=sin_filters * weights[:, None],
    )
    logger.debug(
        'filterbanks_designed',
        fs_hz=geometry.fs_hz,
        frame_len=n_len,
        num_bins=geometry.num_bins,
    )
    return analysis, synthesis


# ------------------------------ transforms ---------------------------------


def _frame_signal(data: np.ndarray, geometry: FrameGeometry) -> np.ndarray:
    """[кадр][канал][отсчёт кадра] с нулевым дополнением hop_len по краям."""
    hop = geometry.hop_len
    num_samples, channels = data.shape
    num_frames = num_frames_for(num_samples, geometry)
    padded = np.zeros(((num_frames + 1) * hop, channels))
    padded[hop : hop + num_samples] = data
    windows = sliding_window_view(padded, geometry.frame_len, axis=0)
    return windows[::hop]


def _overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    """frames: [кадр][канал][отсчёт кадра] → [(T+1)·hop][канал]."""
    num_frames, channels, _ = frames.shape
    by_time = frames.transpose(0, 2, 1)
    out = np.zeros((num_frames + 1, hop, channels))
    out[:-1] += by_time[:, :hop]
    out[1:] += by_time[:, hop:]
    return out.reshape((num_frames + 1) * hop, channels)


def analyze(signal: AudioBuffer, geometry: FrameGeometry) -> Spectrogram:
    require_same_rate(signal.fs_hz, geometry.fs_hz, 'analyze')
    analysis, _ = design_filterbanks(geometry)
    frames = _frame_signal(signal.data, geometry)
    coeffs = frames @ analysis.stacked
    bins = geometry.num_bins
    data = coeffs[..., :bins] + 1j * coeffs[..., bins:]
    return Spectrogram(
        data=np.ascontiguousarray(data.transpose(0, 2, 1)),
        geometry=geometry,
        signal_length=signal.num_samples,
    )


def _check_layout(spec: Spectrogram) -> None:
    geometry = spec.geometry
    if spec.data.ndim != 3 or spec.data.shape[1] != geometry.num_bins:
        raise InvalidArgument(
            f'Спектрограмма формы {spec.data.shape} не соответствует '
            f'геометрии ({geometry.num_bins} бинов)'
        )
    if spec.num_frames < num_frames_for(spec.signal_length, geometry):
        raise InvalidArgument(
            f'{spec.num_frames} кадров недостаточно для сигнала длиной '
            f'{spec.signal_length}'
        )


def synthesize(spec: Spectrogram) -> AudioBuffer:
    _check_layout(spec)
    geometry = spec.geometry
    _, synthesis = design_filterbanks(geometry)
    by_channel = spec.data.transpose(0, 2, 1)
    frames = (
        by_channel.real @ synthesis.real_filters
        + by_channel.imag @ synthesis.imag_filters
    )
    hop = geometry.hop_len
    out = _overlap_add(frames, hop)
    return AudioBuffer(
        data=out[hop : hop + spec.signal_length], fs_hz=geometry.fs_hz
    )


def synthesize_adjoint(
    grad: np.ndarray, geometry: FrameGeometry, num_frames: int
) -> np.ndarray:
    """
    Сопряжённый к synthesize оператор: градиент по выходному сигналу
    [отсчёт][канал] → градиент по спектрограмме [кадр][бин][канал]
    (действительная часть по Re, мнимая по Im).
    """
    _, synthesis = design_filterbanks(geometry)
    hop = geometry.hop_len
    num_samples, channels = grad.shape
    buf = np.zeros(((num_frames + 1) * hop, channels))
    buf[hop : hop + num_samples] = grad
    blocks = buf.reshape(num_frames + 1, hop, channels)
    d_frames = np.concatenate([blocks[:-1], blocks[1:]], axis=1)
    d_frames = d_frames.transpose(0, 2, 1)
    d_real = d_frames @ synthesis.real_filters.T
    d_imag = d_frames @ synthesis.imag_filters.T
    return (d_real + 1j * d_imag).transpose(0, 2, 1)
