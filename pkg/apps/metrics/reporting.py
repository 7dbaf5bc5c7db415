from pathlib import Path
from typing import Sequence

from apps.metrics.schemas import Aggregate, MetricReport

HEADERS = {
    'delta_si_sdr': 'ΔSI-SDR',
    'delta_si_sir': 'ΔSI-SIR',
    'delta_si_sar': 'ΔSI-SAR',
    'si_sdr': 'SI-SDR',
    'si_sir': 'SI-SIR',
    'si_sar': 'SI-SAR',
    'mixture_si_sdr': 'смесь SI-SDR',
    'mixture_si_sir': 'смесь SI-SIR',
    'mixture_si_sar': 'смесь SI-SAR',
    'band_low_mae': 'MAE <4кГц',
    'band_high_mae': 'MAE ≥4кГц',
}
TABLE_COLUMNS = ('delta_si_sdr', 'delta_si_sir', 'si_sar')


def _cell(value: Aggregate | float | str | None, column: str) -> str:
    if value is None:
        return '—'
    if isinstance(value, Aggregate):
        if column.startswith('band_'):
            return f'{value.mean:.2e}±{value.std:.1e}'
        return str(value)
    if isinstance(value, float):
        return f'{value:.2f}'
    return value


def format_table(
    rows: Sequence[tuple[str, dict[str, Aggregate | float | str | None]]],
    columns: Sequence[str],
    headers: dict[str, str] | None = None,
) -> str:
    """Выровненная текстовая таблица: в первой колонке подпись строки."""
    headers = {**HEADERS, **(headers or {})}
    header = ['', *[headers.get(c, c) for c in columns]]
    body = [
        [label, *[_cell(values.get(c), c) for c in columns]]
        for label, values in rows
    ]
    widths = [
        max(len(line[i]) for line in [header, *body])
        for i in range(len(header))
    ]
    lines = []
    for line in [header, *body]:
        cells = [line[0].ljust(widths[0])]
        cells += [cell.rjust(w) for cell, w in zip(line[1:], widths[1:])]
        lines.append('  '.join(cells).rstrip())
    return '\n'.join(lines) + '\n'


def format_report(
    report: MetricReport, columns: Sequence[str] = TABLE_COLUMNS
) -> str:
    """Сводная строка отчёта и построчные значения по элементам."""
    label = report.label or 'итого'
    summary = format_table([(label, report.summary)], columns)
    per_item = format_table(
        [(f'#{item.index:04d}', item.row()) for item in report.items],
        columns,
    )
    text = summary + '\n' + per_item
    if report.skipped:
        text += '\nПропущено:\n' + ''.join(
            f'  #{s.index:04d}: {s.reason}\n' for s in report.skipped
        )
    return text


def report_json(report: MetricReport) -> str:
    return report.model_dump_json(indent=2)


def write_report(report: MetricReport, out_dir: Path | str) -> list[Path]:
    """report.json и report.txt в out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / 'report.json'
    text_path = out_dir / 'report.txt'
    json_path.write_text(report_json(report), encoding='utf-8')
    text_path.write_text(format_report(report), encoding='utf-8')
    return [json_path, text_path]
