"""Обработчики подкоманд: аргументы argparse → вызовы сервисов → файлы."""

from __future__ import annotations

import sys
from argparse import Namespace
from pathlib import Path

import structlog

from apps.cli.experiment import run_experiment
from apps.cli.schemas import ExperimentConfig
from apps.data.repository import CorpusRepository, read_wav, write_wav
from apps.data.resampling import resample
from apps.data.schemas import CorpusManifest
from apps.data.synth import generate_corpus, item_specs
from apps.data.types import Split
from apps.metrics.reporting import write_report
from apps.metrics.services import (
    directory_estimator,
    evaluate_corpus,
    model_estimator,
)
from apps.pipeline.repository import ModelRepository, load_model, save_model
from apps.pipeline.services import (
    build_model,
    remix,
    separate,
    separate_via_rate,
    transfer,
    with_estimated_whitening,
)
from apps.pipeline.training import train
from apps.pipeline.types import ChannelMode
from core.exceptions import EXIT_OK, InvalidArgument
from settings.settings import settings

logger = structlog.get_logger(__name__)

MODEL_FILE = 'model.sfis'
TRAIN_REPORT_FILE = 'train_report.json'


# ------------------------- flags > config > Settings -------------------------


def load_config(args: Namespace) -> ExperimentConfig:
    if args.config is None:
        return ExperimentConfig()
    return ExperimentConfig.load(args.config)


def resolve_seed(args: Namespace, config: ExperimentConfig) -> int:
    if args.seed is not None:
        return args.seed
    if args.config is not None:
        return config.seed
    return settings.DEFAULT_SEED


def resolve_jobs(args: Namespace) -> int:
    return args.jobs if args.jobs is not None else settings.JOBS


def resolve_out(args: Namespace, config: ExperimentConfig) -> Path:
    if args.out is not None:
        return Path(args.out)
    if config.output_dir is not None:
        return config.output_dir
    return settings.OUTPUT_DIR


# -------------------------------- commands ---------------------------------


def synth_data(args: Namespace) -> int:
    config = load_config(args)
    corpus = config.corpus.model_copy(
        update={'seed': resolve_seed(args, config)}
    )
    fs_hz = args.fs or config.training.low_fs_hz
    jobs = resolve_jobs(args)
    repo = CorpusRepository(resolve_out(args, config))
    items = []
    for split in Split:
        examples = generate_corpus(corpus, fs_hz, split, jobs=jobs)
        specs = item_specs(corpus, fs_hz, split)
        items += repo.write_split(split, examples, specs)
    repo.save_manifest(
        CorpusManifest(
            fs_hz=fs_hz,
            channels=corpus.channels,
            duration_s=corpus.duration_s,
            items=items,
        )
    )
    return EXIT_OK


def train_model(args: Namespace) -> int:
    config = load_config(args)
    seed = resolve_seed(args, config)
    repo = CorpusRepository(args.data)
    manifest = repo.load_manifest()
    mode = ChannelMode.for_channels(manifest.channels)
    model_config = config.model.model_copy(update={'channel_mode': mode})
    model = build_model(
        frame_duration_s=model_config.frame_duration_s,
        fs_hz=manifest.fs_hz,
        channel_mode=mode,
        core_config=model_config.core_config(),
        seed=seed,
        alpha=model_config.alpha,
    )
    stats_items = args.stats_items or config.training.stats_items
    model = with_estimated_whitening(
        model, repo.mixtures(Split.TRAIN, stats_items)
    )
    if args.max_epochs is not None:
        max_epochs = args.max_epochs
    elif args.config is not None:
        max_epochs = config.training.max_epochs
    else:
        max_epochs = settings.MAX_EPOCHS
    best, report = train(
        model,
        repo.load_split(Split.TRAIN),
        repo.load_split(Split.VAL),
        augment_config=config.training.augment,
        patience=args.patience or config.training.patience,
        seed=seed,
        max_epochs=max_epochs,
    )
    out = resolve_out(args, config)
    save_model(best, out / MODEL_FILE)
    (out / TRAIN_REPORT_FILE).write_text(
        report.model_dump_json(indent=2), encoding='utf-8'
    )
    return EXIT_OK


def transfer_model(args: Namespace) -> int:
    model = load_model(args.model)
    repo = CorpusRepository(args.data)
    manifest = repo.load_manifest()
    target_fs = args.fs or manifest.fs_hz
    if manifest.fs_hz != target_fs:
        raise InvalidArgument(
            f'Корпус статистик при {manifest.fs_hz} Гц, '
            f'перенос запрошен на {target_fs} Гц'
        )
    moved = transfer(
        model, target_fs, repo.mixtures(Split.TRAIN, args.stats_items)
    )
    save_model(moved, resolve_out(args, ExperimentConfig()) / MODEL_FILE)
    return EXIT_OK


def separate_file(args: Namespace) -> int:
    model = load_model(args.model)
    mixture = read_wav(args.input)
    if args.via_model_rate:
        foreground, background = separate_via_rate(model, mixture)
    else:
        foreground, background = separate(model, mixture)
    out = resolve_out(args, ExperimentConfig())
    write_wav(out / 'foreground.wav', foreground)
    write_wav(out / 'background.wav', background)
    if args.remix_db is not None:
        write_wav(
            out / 'remix.wav', remix(foreground, background, args.remix_db)
        )
    logger.info('separated', input=str(args.input), out=str(out))
    return EXIT_OK


def resample_file(args: Namespace) -> int:
    if args.fs is None or args.out is None:
        raise InvalidArgument('resample требует --fs и --out')
    write_wav(args.out, resample(read_wav(args.input), args.fs))
    return EXIT_OK


def evaluate(args: Namespace) -> int:
    if (args.model is None) == (args.estimates is None):
        raise InvalidArgument('Нужен ровно один из --model и --estimates')
    if args.model is not None:
        estimator = model_estimator(
            load_model(args.model), via_rate=args.via_model_rate
        )
        label = Path(args.model).stem
    else:
        estimator = directory_estimator(args.estimates)
        label = Path(args.estimates).name
    repo = CorpusRepository(args.data)
    split = Split(args.split)
    entries = [
        (item.index, example, reason)
        for item, example, reason in repo.iter_split(split)
    ]
    report = evaluate_corpus(
        entries, estimator, label=label, jobs=resolve_jobs(args)
    )
    write_report(report, resolve_out(args, ExperimentConfig()))
    return EXIT_OK


def inspect_model(args: Namespace) -> int:
    header = ModelRepository(args.model).read_header()
    model = load_model(args.model)
    geometry = model.geometry
    core = model.core_config
    lines = [
        f'частота дискретизации: {model.fs_hz} Гц',
        f'длительность кадра: {model.frame_duration_s} с',
        f'кадр: {geometry.frame_len} отсчётов, шаг {geometry.hop_len}, '
        f'бинов {geometry.num_bins}',
        f'режим: {model.channel_mode.value}',
        f'сжатие alpha: {model.alpha}',
        f'ядро: {core.num_hidden_blocks} скрытых блоков × '
        f'{core.hidden_filters} фильтров, ядро '
        f'{core.kernel_time}×{core.kernel_freq}',
        f'параметров ядра: {model.core_params.scalar_count()}',
        f'тензоров в файле: {len(header.tensors)}',
        f'статистики выбеливания: {model.whitening.sample_count} значений',
    ]
    sys.stdout.write('\n'.join(lines) + '\n')
    return EXIT_OK


def experiment(args: Namespace) -> int:
    config = load_config(args)
    if args.seed is not None or args.config is None:
        seed = resolve_seed(args, config)
        config = config.model_copy(
            update={
                'seed': seed,
                'corpus': config.corpus.model_copy(update={'seed': seed}),
            }
        )
    if args.stats_items is not None:
        config = config.model_copy(
            update={
                'training': config.training.model_copy(
                    update={'stats_items': args.stats_items}
                )
            }
        )
    run_experiment(
        config, resolve_out(args, config), jobs=resolve_jobs(args)
    )
    return EXIT_OK
