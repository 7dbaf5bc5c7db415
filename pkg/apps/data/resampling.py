"""
Рациональная передискретизация полифазным фильтром: окно Кайзера
(β = 12), 64 отвода на фазу по большему из множителей, срез на
0.45 · min(fs_in, fs_out).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np
import structlog
from scipy import signal as sci_sig

from core.audio import AudioBuffer
from core.constants import (
    LOW_BAND_EDGE_HZ,
    RESAMPLER_CUTOFF_RATIO,
    RESAMPLER_KAISER_BETA,
    RESAMPLER_TAPS_PER_PHASE,
)
from core.exceptions import InvalidArgument

logger = structlog.get_logger(__name__)


def rational_ratio(fs_in: int, fs_out: int) -> tuple[int, int]:
    """(p, q): fs_out / fs_in = p / q в несократимом виде."""
    if fs_in <= 0 or fs_out <= 0:
        raise InvalidArgument(
            f'Частоты должны быть положительными: {fs_in}, {fs_out}'
        )
    ratio = Fraction(fs_out, fs_in)
    return ratio.numerator, ratio.denominator


@lru_cache(maxsize=32)
def design_resampling_filter(fs_in: int, fs_out: int) -> np.ndarray:
    """ФНЧ на промежуточной частоте fs_in · p, единичное усиление на DC."""
    up, down = rational_ratio(fs_in, fs_out)
    num_taps = RESAMPLER_TAPS_PER_PHASE * max(up, down) + 1
    taps = sci_sig.firwin(
        num_taps,
        RESAMPLER_CUTOFF_RATIO * min(fs_in, fs_out),
        window=('kaiser', RESAMPLER_KAISER_BETA),
        fs=fs_in * up,
    )
    logger.debug(
        'resampling_filter_designed',
        fs_in=fs_in,
        fs_out=fs_out,
        up=up,
        down=down,
        taps=num_taps,
    )
    return taps


def resample(x: AudioBuffer, target_fs: int) -> AudioBuffer:
    if target_fs == x.fs_hz:
        return x
    up, down = rational_ratio(x.fs_hz, target_fs)
    taps = design_resampling_filter(x.fs_hz, target_fs)
    # resample_poly сам умножает фильтр на up и компенсирует задержку
    data = sci_sig.resample_poly(x.data, up, down, axis=0, window=taps)
    return AudioBuffer(data=data, fs_hz=target_fs)


def lowpass_response(
    fs_in: int, fs_out: int, freqs: np.ndarray
) -> np.ndarray:
    """
    Амплитудная характеристика цепочки fs_in → fs_out на частотах freqs
    (Гц). Ниже 0.3 · min(fs_in, fs_out) полоса пропускания считается
    единичной: пульсации окна Кайзера там меньше 1e-5.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    response = np.ones_like(freqs)
    if fs_out >= fs_in:
        return response
    up, _ = rational_ratio(fs_in, fs_out)
    taps = design_resampling_filter(fs_in, fs_out)
    edge = 0.3 * fs_out
    band = freqs >= edge
    if np.any(band):
        _, h = sci_sig.freqz(taps, worN=freqs[band], fs=fs_in * up)
        response[band] = np.abs(h)
    response[freqs >= fs_out / 2] = 0.0
    return response


def low_anchor(
    x: AudioBuffer, band_edge_hz: float = LOW_BAND_EDGE_HZ
) -> AudioBuffer:
    """
    Опорный сигнал с ограниченной полосой: ФНЧ с тем же окном Кайзера,
    срез band_edge_hz, нулевая фаза за счёт компенсации задержки.
    """
    if not 0 < band_edge_hz < x.fs_hz / 2:
        return x
    periods = max(1, round(x.fs_hz / band_edge_hz))
    num_taps = 2 * RESAMPLER_TAPS_PER_PHASE * periods + 1
    taps = sci_sig.firwin(
        num_taps,
        band_edge_hz,
        window=('kaiser', RESAMPLER_KAISER_BETA),
        fs=x.fs_hz,
    )
    data = sci_sig.fftconvolve(x.data, taps[:, None], mode='same', axes=0)
    return x.with_data(data)
