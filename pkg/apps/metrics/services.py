from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import structlog

from apps.data.repository import read_wav
from apps.data.schemas import Example
from apps.filterbank.services import analyze, frame_geometry
from apps.metrics.schemas import (
    BandError,
    ItemMetrics,
    MetricReport,
    SiMetrics,
    SkippedItem,
)
from apps.pipeline.schemas import SeparationModel
from apps.pipeline.services import estimate_foreground, separate_via_rate
from core.audio import AudioBuffer, check_compatible
from core.constants import (
    DEFAULT_FRAME_DURATION_S,
    GRAM_PINV_RCOND,
    LOW_BAND_EDGE_HZ,
    METRIC_CAP_DB,
)
from core.exceptions import InvalidArgument, MissingStems, UndefinedMetric

logger = structlog.get_logger(__name__)

Signal = AudioBuffer | np.ndarray
Estimator = Callable[[int, AudioBuffer], AudioBuffer]
CorpusEntry = tuple[int, Example | None, str | None]


# ----------------------------- SI metrics ----------------------------------


def _as_vector(x: Signal) -> np.ndarray:
    """Каналы подряд; одномерный массив берётся как есть."""
    if isinstance(x, AudioBuffer):
        return x.flatten()
    arr = np.asarray(x, dtype=np.float64)
    return arr.T.reshape(-1) if arr.ndim == 2 else arr.reshape(-1)


def ratio_db(num: float, den: float) -> float:
    """10·log10(num/den), ограниченное ±METRIC_CAP_DB."""
    if den <= 0.0:
        return METRIC_CAP_DB if num > 0.0 else -METRIC_CAP_DB
    if num <= 0.0:
        return -METRIC_CAP_DB
    value = 10.0 * np.log10(num / den)
    return float(np.clip(value, -METRIC_CAP_DB, METRIC_CAP_DB))


def si_components(
    estimate: Signal, target: Signal, interference: Signal
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Разложение оценки: ŝ = s_t + e_i + e_a.

    s_t: проекция на опорный сигнал; e_i: остаток проекции на
    span{s, n}; e_a: ортогональный к span{s, n} остаток.
    """
    est = _as_vector(estimate)
    s = _as_vector(target)
    n = _as_vector(interference)
    if not est.shape == s.shape == n.shape:
        raise InvalidArgument(
            f'Длины сигналов различаются: оценка {est.size}, '
            f'опорный {s.size}, помеха {n.size}'
        )
    energy = float(s @ s)
    if energy == 0.0:
        raise UndefinedMetric()

    s_target = (float(est @ s) / energy) * s
    basis = np.stack([s, n])
    gram = basis @ basis.T
    coef = np.linalg.pinv(gram, rcond=GRAM_PINV_RCOND) @ (basis @ est)
    projected = coef @ basis
    return s_target, projected - s_target, est - projected


def si_decompose(
    estimate: Signal, target: Signal, interference: Signal
) -> SiMetrics:
    s_target, e_interf, e_artif = si_components(
        estimate, target, interference
    )
    target_energy = float(s_target @ s_target)
    distortion = _as_vector(estimate) - s_target
    return SiMetrics(
        si_sdr=ratio_db(target_energy, float(distortion @ distortion)),
        si_sir=ratio_db(target_energy, float(e_interf @ e_interf)),
        si_sar=ratio_db(
            float((s_target + e_interf) @ (s_target + e_interf)),
            float(e_artif @ e_artif),
        ),
    )


# ------------------------- band magnitude error -----------------------------


def band_mae(
    estimate: AudioBuffer,
    reference: AudioBuffer,
    band_edge_hz: float = LOW_BAND_EDGE_HZ,
    frame_duration_s: Fraction = DEFAULT_FRAME_DURATION_S,
) -> BandError:
    """
    Средняя по кадрам и каналам абсолютная разность модулей спектров
    для каждого бина; сводка ниже и выше band_edge_hz.
    """
    check_compatible(estimate, reference)
    geometry = frame_geometry(frame_duration_s, reference.fs_hz)
    diff = np.abs(
        np.abs(analyze(estimate, geometry).data)
        - np.abs(analyze(reference, geometry).data)
    )
    per_bin = diff.mean(axis=(0, 2))
    freqs = geometry.bin_frequencies()
    low = freqs < band_edge_hz
    return BandError(
        fs_hz=reference.fs_hz,
        band_edge_hz=band_edge_hz,
        bin_frequencies_hz=freqs,
        per_bin=per_bin,
        low_band=float(per_bin[low].mean()) if low.any() else 0.0,
        high_band=float(per_bin[~low].mean()) if (~low).any() else 0.0,
    )


# ---------------------------- corpus level ---------------------------------


def evaluate_item(
    index: int, estimate: AudioBuffer, example: Example
) -> ItemMetrics:
    """Оценка против переднего плана и фона, плюс смесь как «оценка»."""
    check_compatible(estimate, example.foreground)
    band = band_mae(estimate, example.foreground)
    return ItemMetrics(
        index=index,
        processed=si_decompose(
            estimate, example.foreground, example.background
        ),
        mixture=si_decompose(
            example.mixture, example.foreground, example.background
        ),
        band_low_mae=band.low_band,
        band_high_mae=band.high_band,
    )


def evaluate_corpus(
    entries: Iterable[CorpusEntry],
    estimator: Estimator,
    label: str = '',
    jobs: int = 1,
) -> MetricReport:
    """
    entries: (индекс, пример или None, причина пропуска).
    Элементы без дорожек, без оценки или с оценкой другой формы
    пропускаются с причиной; порядок строк отчёта совпадает с порядком
    entries при любом jobs.
    """
    entries = list(entries)
    skipped = [
        SkippedItem(index=index, reason=reason or 'нет дорожек')
        for index, example, reason in entries
        if example is None
    ]
    ready = [(i, ex) for i, ex, _ in entries if ex is not None]

    def run(entry: tuple[int, Example]) -> ItemMetrics | SkippedItem:
        index, example = entry
        try:
            estimate = estimator(index, example.mixture)
            check_compatible(estimate, example.foreground)
        except MissingStems as exc:
            return SkippedItem(index=index, reason=exc.detail)
        except InvalidArgument as exc:
            return SkippedItem(index=index, reason=f'{index}: {exc.detail}')
        return evaluate_item(index, estimate, example)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, ready))
    else:
        results = [run(entry) for entry in ready]

    items = [r for r in results if isinstance(r, ItemMetrics)]
    skipped += [r for r in results if isinstance(r, SkippedItem)]
    skipped.sort(key=lambda s: s.index)
    for item in skipped:
        logger.warning('item_skipped', index=item.index, reason=item.reason)
    if not items:
        raise InvalidArgument('Нет ни одного элемента для оценки')
    fs_hz = next(ex.fs_hz for _, ex in ready)
    report = MetricReport(
        label=label, fs_hz=fs_hz, items=items, skipped=skipped
    )
    logger.info(
        'corpus_evaluated',
        label=label,
        items=len(items),
        skipped=len(skipped),
        delta_si_sdr=report.summary['delta_si_sdr'].mean,
    )
    return report


# ------------------------------ estimators ---------------------------------


def model_estimator(
    model: SeparationModel, via_rate: bool = False
) -> Estimator:
    """Оценка моделью; via_rate: обработка на частоте модели."""

    def estimate(index: int, mixture: AudioBuffer) -> AudioBuffer:
        if via_rate:
            foreground, _ = separate_via_rate(model, mixture)
            return foreground
        return estimate_foreground(model, mixture)

    return estimate


def estimate_path(root: Path | str, index: int) -> Path:
    return Path(root) / f'{index:04d}_foreground.wav'


def directory_estimator(root: Path | str) -> Estimator:
    """Готовые оценки из каталога: NNNN_foreground.wav."""

    def estimate(index: int, mixture: AudioBuffer) -> AudioBuffer:
        path = estimate_path(root, index)
        if not path.is_file():
            raise MissingStems(f'{index}: нет оценки {path.name}')
        return read_wav(path)

    return estimate


def reference_estimator(
    transform: Callable[[AudioBuffer], AudioBuffer],
    examples: dict[int, Example],
) -> Estimator:
    """Оценка как преобразование опорного переднего плана (якоря)."""

    def estimate(index: int, mixture: AudioBuffer) -> AudioBuffer:
        return transform(examples[index].foreground)

    return estimate
