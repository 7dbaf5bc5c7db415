"""
Полный прогон на синтетическом корпусе:

    обучение на low_fs → перенос на high_fs и extra_transfer_fs_hz
                       → обучение «двойника» на high_fs с тем же сидом
                       → оценка всех вариантов на тестовой части

Строки отчёта: модель low_fs через передискретизацию, перенесённые
модели, модель, обученная на high_fs, и ФНЧ-якорь.
"""

from __future__ import annotations

from pathlib import Path

import structlog

from apps.cli.schemas import (
    ExperimentConfig,
    ExperimentReport,
    TimingReport,
    VariantResult,
)
from apps.data.resampling import low_anchor
from apps.data.schemas import Example
from apps.data.synth import generate_corpus
from apps.data.types import Split
from apps.metrics.reporting import format_table
from apps.metrics.schemas import MetricReport
from apps.metrics.services import (
    Estimator,
    evaluate_corpus,
    model_estimator,
    reference_estimator,
)
from apps.pipeline.repository import save_model
from apps.pipeline.schemas import SeparationModel, TrainReport
from apps.pipeline.services import (
    build_model,
    transfer,
    with_estimated_whitening,
)
from apps.pipeline.training import train
from core.audio import AudioBuffer

logger = structlog.get_logger(__name__)

ANCHOR = 'low_anchor'
REPORT_COLUMNS = (
    'delta_si_sdr',
    'delta_si_sir',
    'si_sar',
    'band_low_mae',
    'band_high_mae',
)


def variant_name(train_fs: int, eval_fs: int) -> str:
    if train_fs == eval_fs:
        return f'cnn_{train_fs}'
    return f'cnn_{train_fs}_to_{eval_fs}'


def via_rate_name(train_fs: int) -> str:
    return f'cnn_{train_fs}_via_rate'


class Experiment:
    def __init__(
        self, config: ExperimentConfig, out_dir: Path, jobs: int = 1
    ) -> None:
        self.config = config
        self.out_dir = Path(out_dir)
        self.jobs = jobs
        self._corpora: dict[tuple[int, Split], list[Example]] = {}

    # ------------------------------ data -------------------------------

    def corpus(self, fs_hz: int, split: Split) -> list[Example]:
        key = (fs_hz, split)
        if key not in self._corpora:
            self._corpora[key] = generate_corpus(
                self.config.corpus, fs_hz, split, jobs=self.jobs
            )
        return self._corpora[key]

    def stats_corpus(self, fs_hz: int) -> list[AudioBuffer]:
        limit = self.config.training.stats_items
        return [ex.mixture for ex in self.corpus(fs_hz, Split.TRAIN)[:limit]]

    # ----------------------------- models ------------------------------

    def train_at(self, fs_hz: int) -> tuple[SeparationModel, TrainReport]:
        cfg = self.config
        model = build_model(
            frame_duration_s=cfg.model.frame_duration_s,
            fs_hz=fs_hz,
            channel_mode=cfg.model.channel_mode,
            core_config=cfg.model.core_config(),
            seed=cfg.seed,
            alpha=cfg.model.alpha,
        )
        model = with_estimated_whitening(model, self.stats_corpus(fs_hz))
        best, report = train(
            model,
            self.corpus(fs_hz, Split.TRAIN),
            self.corpus(fs_hz, Split.VAL),
            augment_config=cfg.training.augment,
            patience=cfg.training.patience,
            seed=cfg.seed,
            max_epochs=cfg.training.max_epochs,
        )
        save_model(best, self.out_dir / 'models' / f'cnn_{fs_hz}.sfis')
        return best, report

    def evaluate(
        self, name: str, estimator: Estimator, fs_hz: int
    ) -> MetricReport:
        entries = [
            (index, example, None)
            for index, example in enumerate(self.corpus(fs_hz, Split.TEST))
        ]
        return evaluate_corpus(entries, estimator, label=name, jobs=self.jobs)

    # ------------------------------ run --------------------------------

    def run(self) -> tuple[ExperimentReport, TimingReport]:
        training = self.config.training
        low_fs, high_fs = training.low_fs_hz, training.high_fs_hz
        logger.info(
            'experiment_started',
            seed=self.config.seed,
            low_fs=low_fs,
            high_fs=high_fs,
            out_dir=str(self.out_dir),
        )
        low_model, low_report = self.train_at(low_fs)
        high_model, high_report = self.train_at(high_fs)

        variants = [
            VariantResult(
                name=via_rate_name(low_fs),
                train_fs_hz=low_fs,
                eval_fs_hz=high_fs,
                report=self.evaluate(
                    via_rate_name(low_fs),
                    model_estimator(low_model, via_rate=True),
                    high_fs,
                ),
            )
        ]
        for target_fs in [high_fs, *training.extra_transfer_fs_hz]:
            moved = transfer(
                low_model, target_fs, self.stats_corpus(target_fs)
            )
            name = variant_name(low_fs, target_fs)
            save_model(moved, self.out_dir / 'models' / f'{name}.sfis')
            variants.append(
                VariantResult(
                    name=name,
                    train_fs_hz=low_fs,
                    eval_fs_hz=target_fs,
                    report=self.evaluate(
                        name, model_estimator(moved), target_fs
                    ),
                )
            )
        variants.append(
            VariantResult(
                name=variant_name(high_fs, high_fs),
                train_fs_hz=high_fs,
                eval_fs_hz=high_fs,
                report=self.evaluate(
                    variant_name(high_fs, high_fs),
                    model_estimator(high_model),
                    high_fs,
                ),
            )
        )
        test_set = dict(enumerate(self.corpus(high_fs, Split.TEST)))
        variants.append(
            VariantResult(
                name=ANCHOR,
                train_fs_hz=high_fs,
                eval_fs_hz=high_fs,
                report=self.evaluate(
                    ANCHOR,
                    reference_estimator(low_anchor, test_set),
                    high_fs,
                ),
            )
        )

        report = ExperimentReport(
            seed=self.config.seed,
            config=self.config,
            training={
                str(low_fs): low_report.deterministic_view(),
                str(high_fs): high_report.deterministic_view(),
            },
            variants=variants,
        )
        timing = TimingReport(
            low_fs_hz=low_fs,
            high_fs_hz=high_fs,
            low_epoch_s=low_report.mean_epoch_seconds,
            high_epoch_s=high_report.mean_epoch_seconds,
        )
        logger.info(
            'experiment_finished',
            variants=len(variants),
            speed_ratio=round(timing.speed_ratio, 2),
        )
        return report, timing


def report_json(report: ExperimentReport) -> str:
    return report.model_dump_json(
        indent=2, exclude={'config': {'output_dir'}}
    )


def format_experiment(report: ExperimentReport, timing: TimingReport) -> str:
    rows = [(v.name, v.report.summary) for v in report.variants]
    baseline = report.variants[0].report.summary
    rows.append(
        (
            'смесь (абсолютные значения)',
            {
                'delta_si_sdr': baseline['mixture_si_sdr'],
                'delta_si_sir': baseline['mixture_si_sir'],
                'si_sar': baseline['mixture_si_sar'],
            },
        )
    )
    table = format_table(rows, REPORT_COLUMNS)
    return (
        table
        + f'\nСреднее время эпохи: {timing.low_fs_hz} Гц: '
        f'{timing.low_epoch_s:.2f} с, {timing.high_fs_hz} Гц: '
        f'{timing.high_epoch_s:.2f} с '
        f'(ускорение ×{timing.speed_ratio:.1f})\n'
    )


def write_experiment(
    report: ExperimentReport, timing: TimingReport, out_dir: Path
) -> list[Path]:
    """report.json детерминирован; время эпох пишется в timing.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        'report.json': report_json(report),
        'timing.json': timing.model_dump_json(indent=2),
        'report.txt': format_experiment(report, timing),
    }
    for name, text in paths.items():
        (out_dir / name).write_text(text, encoding='utf-8')
    return [out_dir / name for name in paths]


def run_experiment(
    config: ExperimentConfig, out_dir: Path, jobs: int = 1
) -> ExperimentReport:
    report, timing = Experiment(config, out_dir, jobs=jobs).run()
    write_experiment(report, timing, out_dir)
    return report
