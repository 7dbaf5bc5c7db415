from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np
import structlog

from apps.cnn.loss import mae_gradient, mae_loss
from apps.cnn.optim import adadelta_step
from apps.cnn.schemas import AdadeltaState
from apps.data.augment import augment
from apps.data.schemas import AugmentConfig, Example
from apps.pipeline.graph import PipelineGraph
from apps.pipeline.schemas import EpochRecord, SeparationModel, TrainReport
from apps.pipeline.services import estimate_foreground
from apps.pipeline.types import StopReason
from core.constants import DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE
from core.exceptions import InvalidArgument, TrainingDiverged

logger = structlog.get_logger(__name__)

VALIDATION_ITEM = -1


class EarlyStopping:
    """Остановка после `patience` эпох без строгого улучшения."""

    def __init__(self, patience: int = DEFAULT_PATIENCE) -> None:
        if patience < 1:
            raise InvalidArgument('patience должно быть не меньше 1')
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = 0
        self.epoch = 0
        self.wait = 0

    def update(self, val_loss: float) -> bool:
        """Возвращает True, если эпоха дала новый минимум."""
        self.epoch += 1
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = self.epoch
            self.wait = 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


def validation_loss(
    model: SeparationModel, corpus: Sequence[Example]
) -> float:
    losses = [
        mae_loss(estimate_foreground(model, ex.mixture), ex.foreground)
        for ex in corpus
    ]
    return float(np.mean(losses))


def _check_corpus(
    model: SeparationModel, corpus: Sequence[Example], what: str
) -> None:
    if not corpus:
        raise InvalidArgument(f'Корпус {what} пуст')
    for ex in corpus:
        if ex.fs_hz != model.fs_hz:
            raise InvalidArgument(
                f'Корпус {what}: {ex.fs_hz} Гц, модель {model.fs_hz} Гц'
            )
        if ex.num_channels != model.num_channels:
            raise InvalidArgument(
                f'Корпус {what}: {ex.num_channels} каналов, '
                f'модель {model.channel_mode.value}'
            )


def train(
    model: SeparationModel,
    train_corpus: Sequence[Example],
    val_corpus: Sequence[Example],
    augment_config: AugmentConfig | None = None,
    patience: int = DEFAULT_PATIENCE,
    seed: int = 0,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> tuple[SeparationModel, TrainReport]:
    """
    Обучение по одному примеру на шаг ADADELTA, примеры полной длины.
    Порядок и аугментации перетасовываются каждую эпоху от одного rng;
    возвращается модель с минимальной потерей на валидации.
    """
    _check_corpus(model, train_corpus, 'обучения')
    _check_corpus(model, val_corpus, 'валидации')
    augment_config = augment_config or AugmentConfig()

    rng = np.random.default_rng(seed)
    params = model.core_params.copy()
    state = AdadeltaState.zeros(params)
    stopper = EarlyStopping(patience)
    best = model
    records: list[EpochRecord] = []
    stop_reason = StopReason.MAX_EPOCHS

    logger.info(
        'training_started',
        fs_hz=model.fs_hz,
        train_items=len(train_corpus),
        val_items=len(val_corpus),
        patience=patience,
        max_epochs=max_epochs,
        seed=seed,
    )
    for epoch in range(1, max_epochs + 1):
        started = time.perf_counter()
        losses = []
        for item in rng.permutation(len(train_corpus)):
            example = augment(train_corpus[item], augment_config, rng)
            graph = PipelineGraph(model.with_params(params))
            estimate = graph.forward(example.mixture)
            loss = mae_loss(estimate, example.foreground)
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, int(item))
            grads = graph.backward(
                mae_gradient(estimate, example.foreground)
            )
            params, state = adadelta_step(params, grads, state)
            losses.append(loss)

        current = model.with_params(params)
        val_loss = validation_loss(current, val_corpus)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(epoch, VALIDATION_ITEM)
        if stopper.update(val_loss):
            best = current.with_params(params.copy())
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            val_loss=val_loss,
            seconds=time.perf_counter() - started,
        )
        records.append(record)
        logger.info(
            'epoch_finished',
            epoch=epoch,
            train_loss=record.train_loss,
            val_loss=val_loss,
            best_epoch=stopper.best_epoch,
            seconds=round(record.seconds, 3),
        )
        if stopper.should_stop:
            stop_reason = StopReason.PATIENCE
            break

    report = TrainReport(
        epochs=records,
        best_epoch=stopper.best_epoch,
        best_val_loss=stopper.best_loss,
        stop_reason=stop_reason,
    )
    logger.info(
        'training_finished',
        epochs=len(records),
        best_epoch=report.best_epoch,
        best_val_loss=report.best_val_loss,
        stop_reason=stop_reason.value,
    )
    return best, report
