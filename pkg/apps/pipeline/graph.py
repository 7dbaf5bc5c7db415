from __future__ import annotations

import numpy as np

from apps.cnn.schemas import CoreParameters
from apps.cnn.services import CoreCache, CoreNetwork
from apps.features.schemas import FeatureTensor
from apps.features.services import (
    apply_mask,
    apply_whitening,
    mask_gradient,
    spectral_features,
)
from apps.filterbank.schemas import Spectrogram
from apps.filterbank.services import analyze, synthesize, synthesize_adjoint
from apps.pipeline.schemas import SeparationModel
from core.audio import AudioBuffer
from core.exceptions import StateError


def encode(
    model: SeparationModel, mixture: AudioBuffer
) -> tuple[Spectrogram, FeatureTensor]:
    """Спектрограмма смеси и выбеленные сжатые признаки для ядра."""
    spec = analyze(mixture, model.geometry)
    features = apply_whitening(
        spectral_features(spec, model.alpha), model.whitening
    )
    return spec, features


class PipelineGraph:
    """
    Прямой проход смесь → маски → оценка переднего плана с сохранением
    промежуточных значений и обратный проход до параметров ядра.
    Кодер, сжатие и выбеливание от параметров не зависят.
    """

    def __init__(self, model: SeparationModel) -> None:
        self.model = model
        self.network = CoreNetwork(model.core_config, model.core_params)
        self._spec: Spectrogram | None = None
        self._cache: CoreCache | None = None

    def forward(self, mixture: AudioBuffer) -> AudioBuffer:
        spec, features = encode(self.model, mixture)
        masks, cache = self.network.forward(features)
        self._spec, self._cache = spec, cache
        return synthesize(apply_mask(spec, masks))

    def backward(self, d_foreground: np.ndarray) -> CoreParameters:
        """d_foreground: градиент потерь по оценке [отсчёт][канал]."""
        if self._spec is None or self._cache is None:
            raise StateError()
        d_masked = synthesize_adjoint(
            d_foreground, self._spec.geometry, self._spec.num_frames
        )
        d_masks = mask_gradient(self._spec, d_masked)
        _, grads = self.network.backward(self._cache, d_masks)
        return grads

    def reset(self) -> None:
        self._spec = None
        self._cache = None
