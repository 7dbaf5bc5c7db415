import json

import pytest

from apps.metrics.reporting import format_report, format_table, write_report
from apps.metrics.schemas import (
    Aggregate,
    ItemMetrics,
    MetricReport,
    SiMetrics,
    SkippedItem,
)


@pytest.fixture
def report() -> MetricReport:
    items = [
        ItemMetrics(
            index=i,
            processed=SiMetrics(si_sdr=5.0 + i, si_sir=10.0, si_sar=8.0),
            mixture=SiMetrics(si_sdr=0.0, si_sir=0.0, si_sar=100.0),
            band_low_mae=0.01,
            band_high_mae=0.02,
        )
        for i in range(2)
    ]
    return MetricReport(
        label='cnn_8000',
        fs_hz=8000,
        items=items,
        skipped=[SkippedItem(index=5, reason='нет оценки')],
    )


@pytest.mark.services
class TestReporting:
    def test_summary(self, report):
        summary = report.summary
        assert summary['delta_si_sdr'] == Aggregate(mean=5.5, std=0.5)
        assert summary['delta_si_sar'].mean == -92.0
        assert str(summary['delta_si_sdr']) == '5.5±0.5'

    def test_table_is_aligned(self):
        text = format_table(
            [('a', {'x': 1.0}), ('длинная', {'x': 12.346})],
            ['x'],
            headers={'x': 'X'},
        )
        lines = text.splitlines()
        assert lines[0].endswith('X')
        assert lines[1] == 'a         1.00'
        assert lines[2] == 'длинная  12.35'

    def test_missing_value_is_dash(self):
        text = format_table([('a', {})], ['x'])
        assert text.splitlines()[1].endswith('—')

    def test_format_report(self, report):
        text = format_report(report)
        assert 'cnn_8000' in text
        assert '5.5±0.5' in text
        assert '#0001' in text
        assert '#0005: нет оценки' in text

    def test_write_report(self, report, tmp_path):
        paths = write_report(report, tmp_path / 'out')
        assert [p.name for p in paths] == ['report.json', 'report.txt']
        data = json.loads(paths[0].read_text(encoding='utf-8'))
        assert data['summary']['delta_si_sdr']['mean'] == 5.5
        assert data['items'][1]['delta']['si_sdr'] == 6.0
