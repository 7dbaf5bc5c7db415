import argparse

from apps.cli import commands
from apps.data.types import Split


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON-конфигурация эксперимента')
    common.add_argument('--seed', type=int, help='сид всех случайностей')
    common.add_argument('--jobs', type=int, help='параллельных процессов')
    common.add_argument('--out', help='каталог (или файл) результатов')
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='sfis',
        description='Разделение диалога и фона моделью, параметры которой '
        'не зависят от частоты дискретизации.',
    )
    sub = parser.add_subparsers(dest='command', required=True)
    common = [_common()]

    p = sub.add_parser(
        'synth-data', parents=common, help='синтетический корпус и манифест'
    )
    p.add_argument('--fs', type=int, help='частота корпуса, Гц')
    p.set_defaults(handler=commands.synth_data)

    p = sub.add_parser('train', parents=common, help='обучение модели')
    p.add_argument('--data', required=True, help='каталог корпуса')
    p.add_argument('--patience', type=int)
    p.add_argument('--max-epochs', type=int)
    p.add_argument('--stats-items', type=int)
    p.set_defaults(handler=commands.train_model)

    p = sub.add_parser(
        'transfer', parents=common, help='перенос модели на другую частоту'
    )
    p.add_argument('--model', required=True)
    p.add_argument('--fs', type=int, help='целевая частота, Гц')
    p.add_argument('--data', required=True, help='корпус статистик')
    p.add_argument('--stats-items', type=int)
    p.set_defaults(handler=commands.transfer_model)

    p = sub.add_parser(
        'separate', parents=common, help='смесь → передний план и фон'
    )
    p.add_argument('--model', required=True)
    p.add_argument('--input', required=True, help='WAV-файл смеси')
    p.add_argument(
        '--remix-db',
        type=float,
        help='записать remix.wav с фоном, изменённым на столько дБ',
    )
    p.add_argument(
        '--via-model-rate',
        action='store_true',
        help='обрабатывать на частоте модели с передискретизацией',
    )
    p.set_defaults(handler=commands.separate_file)

    p = sub.add_parser(
        'resample', parents=common, help='передискретизация WAV'
    )
    p.add_argument('--input', required=True)
    p.add_argument('--fs', type=int, required=True)
    p.set_defaults(handler=commands.resample_file)

    p = sub.add_parser(
        'evaluate', parents=common, help='SI-метрики на части корпуса'
    )
    p.add_argument('--data', required=True)
    p.add_argument('--model')
    p.add_argument('--estimates', help='каталог NNNN_foreground.wav')
    p.add_argument('--via-model-rate', action='store_true')
    p.add_argument(
        '--split', choices=[s.value for s in Split], default=Split.TEST.value
    )
    p.set_defaults(handler=commands.evaluate)

    p = sub.add_parser(
        'inspect', help='заголовок, геометрия и число параметров модели'
    )
    p.add_argument('--model', required=True)
    p.set_defaults(handler=commands.inspect_model)

    p = sub.add_parser(
        'experiment', parents=common, help='полный прогон с отчётом'
    )
    p.add_argument('--stats-items', type=int)
    p.set_defaults(handler=commands.experiment)

    return parser
