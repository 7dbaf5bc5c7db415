import numpy as np

from core.audio import AudioBuffer
from core.exceptions import InvalidArgument


def _check(estimate: AudioBuffer, reference: AudioBuffer) -> None:
    if estimate.fs_hz != reference.fs_hz:
        raise InvalidArgument('Частоты оценки и опорного сигнала различаются')
    if estimate.data.shape != reference.data.shape:
        raise InvalidArgument(
            f'Формы оценки {estimate.data.shape} и опорного сигнала '
            f'{reference.data.shape} не совпадают'
        )


def mae_loss(estimate: AudioBuffer, reference: AudioBuffer) -> float:
    """Средняя абсолютная ошибка по всем отсчётам и каналам."""
    _check(estimate, reference)
    return float(np.mean(np.abs(estimate.data - reference.data)))


def mae_gradient(estimate: AudioBuffer, reference: AudioBuffer) -> np.ndarray:
    """Субградиент MAE по оценке; в точке совпадения равен 0."""
    _check(estimate, reference)
    return np.sign(estimate.data - reference.data) / estimate.data.size
