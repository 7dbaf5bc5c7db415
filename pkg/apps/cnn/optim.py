from __future__ import annotations

import numpy as np

from apps.cnn.schemas import AdadeltaState, CoreParameters
from core.exceptions import ShapeError


def adadelta_step(
    params: CoreParameters,
    grads: CoreParameters,
    state: AdadeltaState,
) -> tuple[CoreParameters, AdadeltaState]:
    """
    Один шаг ADADELTA без глобального шага обучения:
        E[g²]  ← ρ·E[g²] + (1 − ρ)·g²
        Δx     = −sqrt(E[Δx²] + ε) / sqrt(E[g²] + ε) · g
        E[Δx²] ← ρ·E[Δx²] + (1 − ρ)·Δx²
        x      ← x + Δx
    Входные объекты не изменяются.
    """
    if grads.names() != params.names():
        raise ShapeError('Набор градиентов не совпадает с параметрами')
    rho, eps = state.rho, state.eps
    new_params: dict[str, np.ndarray] = {}
    new_sq: dict[str, np.ndarray] = {}
    new_acc: dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        sq = rho * state.square_avg[name] + (1.0 - rho) * g * g
        delta = -np.sqrt(state.acc_delta[name] + eps) / np.sqrt(sq + eps) * g
        new_acc[name] = rho * state.acc_delta[name] + (1.0 - rho) * delta**2
        new_sq[name] = sq
        new_params[name] = (value + delta).astype(value.dtype)
    return CoreParameters(new_params), AdadeltaState(
        CoreParameters(new_sq),
        CoreParameters(new_acc),
        rho,
        eps,
        state.step + 1,
    )
