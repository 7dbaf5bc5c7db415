from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np
import soundfile as sf
import structlog
from pydantic import ValidationError

from apps.data.schemas import (
    CorpusManifest,
    Example,
    ManifestItem,
    SynthSpec,
)
from apps.data.types import Split
from core.audio import AudioBuffer
from core.exceptions import (
    InvalidArgument,
    MissingStems,
    UnsupportedFormat,
    WavParseError,
)

logger = structlog.get_logger(__name__)

RIFF_MAGIC = b'RIFF'
SUPPORTED_SUBTYPES = ('PCM_16', 'FLOAT')
MANIFEST_NAME = 'manifest.json'
STEMS = ('mixture', 'foreground', 'background')


# --------------------------------- WAV -------------------------------------


def read_wav(path: Path | str) -> AudioBuffer:
    """RIFF/WAVE, PCM16 или float32, 1–2 канала; PCM16 делится на 32768."""
    path = Path(path)
    with path.open('rb') as fh:
        magic = fh.read(4)
    if magic != RIFF_MAGIC:
        raise WavParseError(
            f'{path}: ожидалась сигнатура RIFF, а не {magic!r}'
        )
    try:
        info = sf.info(str(path))
    except (sf.LibsndfileError, RuntimeError) as exc:
        raise WavParseError(f'{path}: {exc}') from exc
    if info.format != 'WAV':
        raise UnsupportedFormat(f'{path}: контейнер {info.format}')
    if info.subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedFormat(f'{path}: кодек {info.subtype}')
    if info.channels not in (1, 2):
        raise UnsupportedFormat(f'{path}: {info.channels} каналов')
    try:
        data, fs_hz = sf.read(str(path), dtype='float64', always_2d=True)
    except (sf.LibsndfileError, RuntimeError) as exc:
        raise WavParseError(f'{path}: {exc}') from exc
    return AudioBuffer(data=data, fs_hz=fs_hz)


def write_wav(
    path: Path | str, buffer: AudioBuffer, subtype: str = 'FLOAT'
) -> Path:
    if subtype not in SUPPORTED_SUBTYPES:
        raise UnsupportedFormat(f'Запись в {subtype} не поддерживается')
    if buffer.num_channels not in (1, 2):
        raise UnsupportedFormat(f'{buffer.num_channels} каналов')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(
        str(path),
        buffer.data.astype(np.float32),
        buffer.fs_hz,
        subtype=subtype,
        format='WAV',
    )
    return path


# -------------------------------- corpus -----------------------------------


class CorpusRepository:
    """Корпус на диске: split/NNNN_<дорожка>.wav и manifest.json."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def _stem_path(self, split: Split, index: int, stem: str) -> Path:
        return Path(split.value) / f'{index:04d}_{stem}.wav'

    def write_split(
        self,
        split: Split,
        examples: list[Example],
        specs: list[SynthSpec],
    ) -> list[ManifestItem]:
        items = []
        for index, (example, spec) in enumerate(zip(examples, specs)):
            paths = {
                stem: self._stem_path(split, index, stem) for stem in STEMS
            }
            for stem, rel in paths.items():
                write_wav(self.root / rel, getattr(example, stem))
            items.append(
                ManifestItem(
                    split=split,
                    index=index,
                    seed=spec.seed,
                    mix_snr_db=spec.mix_snr_db,
                    **paths,
                )
            )
        return items

    def save_manifest(self, manifest: CorpusManifest) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(
            manifest.model_dump_json(indent=2), encoding='utf-8'
        )
        logger.info(
            'manifest_saved',
            path=str(self.manifest_path),
            items=len(manifest.items),
        )
        return self.manifest_path

    def load_manifest(self) -> CorpusManifest:
        try:
            raw = self.manifest_path.read_text(encoding='utf-8')
        except FileNotFoundError as exc:
            raise InvalidArgument(
                f'Манифест корпуса не найден: {self.manifest_path}'
            ) from exc
        try:
            return CorpusManifest.model_validate_json(raw)
        except ValidationError as exc:
            raise InvalidArgument(
                f'Некорректный манифест {self.manifest_path}: '
                f'{exc.error_count()} ошибок'
            ) from exc

    def load_example(self, item: ManifestItem) -> Example:
        missing = [
            stem
            for stem in STEMS
            if not (self.root / getattr(item, stem)).is_file()
        ]
        if missing:
            raise MissingStems(
                f'{item.split.value}/{item.index}: нет {", ".join(missing)}'
            )
        stems = {
            stem: read_wav(self.root / getattr(item, stem)) for stem in STEMS
        }
        return Example(**stems)

    def iter_split(
        self, split: Split
    ) -> Iterator[tuple[ManifestItem, Example | None, str | None]]:
        """(элемент, пример или None, причина пропуска)."""
        for item in self.load_manifest().for_split(split):
            try:
                yield item, self.load_example(item), None
            except MissingStems as exc:
                logger.warning(
                    'item_skipped',
                    split=split.value,
                    index=item.index,
                    reason=exc.detail,
                )
                yield item, None, exc.detail

    def load_split(self, split: Split) -> list[Example]:
        """Строгая загрузка: отсутствующая дорожка считается ошибкой."""
        return [
            self.load_example(item)
            for item in self.load_manifest().for_split(split)
        ]

    def mixtures(
        self, split: Split, limit: int | None = None
    ) -> list[AudioBuffer]:
        items = self.load_manifest().for_split(split)[:limit]
        return [read_wav(self.root / item.mixture) for item in items]
