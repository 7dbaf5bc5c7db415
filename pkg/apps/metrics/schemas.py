import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

COLUMNS = (
    'delta_si_sdr',
    'delta_si_sir',
    'delta_si_sar',
    'si_sdr',
    'si_sir',
    'si_sar',
    'mixture_si_sdr',
    'mixture_si_sir',
    'mixture_si_sar',
)
BAND_COLUMNS = ('band_low_mae', 'band_high_mae')


class SiMetrics(BaseModel):
    """SI-SDR, SI-SIR, SI-SAR в дБ."""

    model_config = ConfigDict(frozen=True)

    si_sdr: float
    si_sir: float
    si_sar: float

    def __sub__(self, other: 'SiMetrics') -> 'SiMetrics':
        return SiMetrics(
            si_sdr=self.si_sdr - other.si_sdr,
            si_sir=self.si_sir - other.si_sir,
            si_sar=self.si_sar - other.si_sar,
        )


class ItemMetrics(BaseModel):
    index: int
    processed: SiMetrics
    mixture: SiMetrics
    band_low_mae: float
    band_high_mae: float

    @computed_field
    @property
    def delta(self) -> SiMetrics:
        return self.processed - self.mixture

    def row(self) -> dict[str, float]:
        values = {}
        for prefix, metrics in (
            ('delta_', self.delta),
            ('', self.processed),
            ('mixture_', self.mixture),
        ):
            for name, value in metrics.model_dump().items():
                values[prefix + name] = value
        values['band_low_mae'] = self.band_low_mae
        values['band_high_mae'] = self.band_high_mae
        return values


class Aggregate(BaseModel):
    """Среднее ± СКО (генеральное) по элементам."""

    mean: float
    std: float

    @classmethod
    def of(cls, values: list[float]) -> 'Aggregate':
        arr = np.asarray(values, dtype=np.float64)
        return cls(mean=float(arr.mean()), std=float(arr.std()))

    def __str__(self) -> str:
        return f'{self.mean:.1f}±{self.std:.1f}'


class SkippedItem(BaseModel):
    index: int
    reason: str


class MetricReport(BaseModel):
    label: str = ''
    fs_hz: int = Field(..., gt=0)
    items: list[ItemMetrics] = Field(..., min_length=1)
    skipped: list[SkippedItem] = []

    @computed_field
    @property
    def summary(self) -> dict[str, Aggregate]:
        rows = [item.row() for item in self.items]
        return {
            column: Aggregate.of([row[column] for row in rows])
            for column in COLUMNS + BAND_COLUMNS
        }


class BandError(BaseModel):
    """Средняя ошибка модулей спектров по бинам и её сводка по полосам."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    fs_hz: int
    band_edge_hz: float
    bin_frequencies_hz: np.ndarray = Field(..., exclude=True)
    per_bin: np.ndarray = Field(..., exclude=True)
    low_band: float
    high_band: float
