"""
Строительные блоки сверточного ядра. Тензоры имеют раскладку
[кадр][бин][канал]; свёртка считается как сумма сдвинутых матричных
произведений по всем позициям ядра.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from apps.cnn.types import Activation, BlockParams
from core.constants import LAYERNORM_MIN_CHANNELS, LAYERNORM_VAR_FLOOR
from core.exceptions import InvalidArgument, ShapeError


# ------------------------------- padding -----------------------------------


def pad_input(x: np.ndarray, pad_time: int, pad_freq: int) -> np.ndarray:
    """Отражение по частоте (без повтора края), нули по времени."""
    if x.shape[1] < pad_freq + 1:
        raise InvalidArgument(
            f'Для отражающего дополнения нужно не меньше {pad_freq + 1} '
            f'бинов, получено {x.shape[1]}'
        )
    xp = np.pad(x, ((0, 0), (pad_freq, pad_freq), (0, 0)), mode='reflect')
    return np.pad(xp, ((pad_time, pad_time), (0, 0), (0, 0)))


def unpad_gradient(
    dxp: np.ndarray, pad_time: int, pad_freq: int, frames: int, bins: int
) -> np.ndarray:
    """Сопряжённое к pad_input: отражённые столбцы складываются обратно."""
    rows = dxp[pad_time : pad_time + frames]
    dx = rows[:, pad_freq : pad_freq + bins].copy()
    for j in range(1, pad_freq + 1):
        dx[:, j] += rows[:, pad_freq - j]
        dx[:, bins - 1 - j] += rows[:, pad_freq + bins - 1 + j]
    return dx


# ------------------------------ convolution --------------------------------


def conv2d(
    xp: np.ndarray, weight: np.ndarray, bias: np.ndarray
) -> np.ndarray:
    """xp: уже дополненный вход; weight: [out][in][kt][kf]."""
    out_ch, _, kt, kf = weight.shape
    frames = xp.shape[0] - kt + 1
    bins = xp.shape[1] - kf + 1
    out = np.empty((frames * bins, out_ch))
    out[:] = bias
    for dt in range(kt):
        for df in range(kf):
            patch = xp[dt : dt + frames, df : df + bins].reshape(
                frames * bins, -1
            )
            out += patch @ weight[:, :, dt, df].T
    return out.reshape(frames, bins, out_ch)


def conv2d_backward(
    dz: np.ndarray, xp: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Возвращает (d_xp, d_weight, d_bias)."""
    out_ch, _, kt, kf = weight.shape
    frames, bins, _ = dz.shape
    dz2 = dz.reshape(frames * bins, out_ch)
    d_weight = np.empty(weight.shape)
    d_xp = np.zeros(xp.shape)
    for dt in range(kt):
        for df in range(kf):
            patch = xp[dt : dt + frames, df : df + bins].reshape(
                frames * bins, -1
            )
            d_weight[:, :, dt, df] = dz2.T @ patch
            d_xp[dt : dt + frames, df : df + bins] += (
                dz2 @ weight[:, :, dt, df]
            ).reshape(frames, bins, -1)
    return d_xp, d_weight, dz2.sum(axis=0)


# ------------------------------ layer norm ---------------------------------


@dataclass
class NormCache:
    xhat: np.ndarray
    sigma: np.ndarray
    active: np.ndarray
    passthrough: bool = False


def layer_norm(
    a: np.ndarray, gain: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, NormCache]:
    """
    Нормировка по каналам в каждой точке (кадр, бин). При числе каналов
    меньше LAYERNORM_MIN_CHANNELS статистики не считаются, остаётся
    только поканальное аффинное преобразование.
    """
    if a.shape[-1] < LAYERNORM_MIN_CHANNELS:
        ones = np.ones(a.shape[:-1] + (1,))
        cache = NormCache(a, ones, np.zeros_like(ones, dtype=bool), True)
        return gain * a + bias, cache
    mu = a.mean(axis=-1, keepdims=True)
    var = ((a - mu) ** 2).mean(axis=-1, keepdims=True)
    active = var > LAYERNORM_VAR_FLOOR
    sigma = np.sqrt(np.maximum(var, LAYERNORM_VAR_FLOOR))
    xhat = (a - mu) / sigma
    return gain * xhat + bias, NormCache(xhat, sigma, active)


def layer_norm_backward(
    dy: np.ndarray, gain: np.ndarray, cache: NormCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Возвращает (d_a, d_gain, d_bias)."""
    d_gain = (dy * cache.xhat).sum(axis=(0, 1))
    d_bias = dy.sum(axis=(0, 1))
    dxhat = dy * gain
    if cache.passthrough:
        return dxhat, d_gain, d_bias
    mean_d = dxhat.mean(axis=-1, keepdims=True)
    # при ограниченной снизу дисперсии σ не зависит от входа
    mean_dx = np.where(
        cache.active, (dxhat * cache.xhat).mean(axis=-1, keepdims=True), 0.0
    )
    d_a = (dxhat - mean_d - cache.xhat * mean_dx) / cache.sigma
    return d_a, d_gain, d_bias


# -------------------------------- blocks -----------------------------------


@dataclass
class BlockCache:
    xp: np.ndarray
    z: np.ndarray
    norm: NormCache
    y: np.ndarray
    frames: int
    bins: int


def conv_block_forward(
    x: np.ndarray,
    params: BlockParams,
    activation: Activation,
) -> tuple[np.ndarray, BlockCache]:
    """
    Скрытый блок: свёртка → ReLU → нормировка.
    Выходной блок: свёртка → нормировка → tanh.
    """
    _, in_ch, kt, kf = params.weight.shape
    frames, bins, channels = x.shape
    if channels != in_ch:
        raise ShapeError(
            f'Блок ожидает {in_ch} входных каналов, получено {channels}'
        )
    xp = pad_input(x, kt // 2, kf // 2)
    z = conv2d(xp, params.weight, params.bias)
    if activation is Activation.RELU:
        y, norm = layer_norm(
            np.maximum(z, 0.0), params.norm_gain, params.norm_bias
        )
    else:
        u, norm = layer_norm(z, params.norm_gain, params.norm_bias)
        y = np.tanh(u)
    return y, BlockCache(xp, z, norm, y, frames, bins)


def conv_block_backward(
    dy: np.ndarray,
    params: BlockParams,
    activation: Activation,
    cache: BlockCache,
) -> tuple[np.ndarray, BlockParams]:
    """Градиенты по входу и по параметрам блока."""
    _, _, kt, kf = params.weight.shape
    if activation is Activation.RELU:
        da, d_gain, d_beta = layer_norm_backward(
            dy, params.norm_gain, cache.norm
        )
        dz = da * (cache.z > 0)
    else:
        du = dy * (1.0 - cache.y**2)
        dz, d_gain, d_beta = layer_norm_backward(
            du, params.norm_gain, cache.norm
        )
    d_xp, d_weight, d_bias = conv2d_backward(dz, cache.xp, params.weight)
    dx = unpad_gradient(d_xp, kt // 2, kf // 2, cache.frames, cache.bins)
    return dx, BlockParams(d_weight, d_bias, d_gain, d_beta)
