"""
Файл модели «SFIS»:

    b'SFIS' | версия (<u4) | длина заголовка (<u4) | JSON-заголовок (UTF-8)
    | тензоры подряд в порядке манифеста

Параметры ядра хранятся как <f4, статистики выбеливания как <f8.
Смещения в манифесте отсчитываются от начала секции тензоров.
"""

from __future__ import annotations

import struct
from fractions import Fraction
from pathlib import Path
from typing import Literal

import numpy as np
import structlog
from pydantic import BaseModel, ValidationError

from apps.cnn.schemas import CoreConfig, CoreParameters
from apps.features.schemas import WhiteningStats
from apps.pipeline.schemas import SeparationModel
from apps.pipeline.types import ChannelMode
from core.constants import (
    MODEL_FORMAT_VERSION,
    MODEL_MAGIC,
    SUPPORTED_MODEL_VERSIONS,
)
from core.exceptions import (
    BadMagic,
    ModelLoadError,
    TruncatedModel,
    UnsupportedVersion,
)

logger = structlog.get_logger(__name__)

PREFIX = struct.Struct('<4sII')
WHITENING_MEAN = 'whitening.mean'
WHITENING_STD = 'whitening.std'
DTYPES = {'float32': '<f4', 'float64': '<f8'}


class RationalValue(BaseModel):
    numerator: int
    denominator: int

    @classmethod
    def of(cls, value: Fraction) -> 'RationalValue':
        return cls(numerator=value.numerator, denominator=value.denominator)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


class TensorEntry(BaseModel):
    name: str
    dtype: Literal['float32', 'float64']
    shape: list[int]
    offset: int
    nbytes: int


class WhiteningMeta(BaseModel):
    fs_hz: int
    num_bins: int
    sample_count: int


class ModelHeader(BaseModel):
    frame_duration_s: RationalValue
    fs_hz: int
    alpha: float
    channel_mode: ChannelMode
    core_config: CoreConfig
    whitening: WhiteningMeta
    tensors: list[TensorEntry]

    @property
    def payload_size(self) -> int:
        return max((t.offset + t.nbytes for t in self.tensors), default=0)


def _manifest(
    model: SeparationModel,
) -> tuple[list[TensorEntry], list[bytes]]:
    entries, blobs = [], []
    offset = 0
    arrays = [
        (name, 'float32', value) for name, value in model.core_params.items()
    ]
    arrays += [
        (WHITENING_MEAN, 'float64', model.whitening.mean),
        (WHITENING_STD, 'float64', model.whitening.std),
    ]
    for name, dtype, value in arrays:
        blob = np.ascontiguousarray(value, dtype=DTYPES[dtype]).tobytes()
        entries.append(
            TensorEntry(
                name=name,
                dtype=dtype,
                shape=list(np.shape(value)),
                offset=offset,
                nbytes=len(blob),
            )
        )
        blobs.append(blob)
        offset += len(blob)
    return entries, blobs


class ModelRepository:
    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)

    # ------------------------------ write ------------------------------

    def save(self, model: SeparationModel) -> Path:
        entries, blobs = _manifest(model)
        header = ModelHeader(
            frame_duration_s=RationalValue.of(model.frame_duration_s),
            fs_hz=model.fs_hz,
            alpha=model.alpha,
            channel_mode=model.channel_mode,
            core_config=model.core_config,
            whitening=WhiteningMeta(
                fs_hz=model.whitening.fs_hz,
                num_bins=model.whitening.num_bins,
                sample_count=model.whitening.sample_count,
            ),
            tensors=entries,
        )
        header_bytes = header.model_dump_json().encode('utf-8')
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open('wb') as fh:
            fh.write(
                PREFIX.pack(
                    MODEL_MAGIC, MODEL_FORMAT_VERSION, len(header_bytes)
                )
            )
            fh.write(header_bytes)
            for blob in blobs:
                fh.write(blob)
        logger.info(
            'model_saved',
            path=str(self.path),
            fs_hz=model.fs_hz,
            tensors=len(entries),
        )
        return self.path

    # ------------------------------ read -------------------------------

    def _read(self) -> tuple[ModelHeader, bytes]:
        raw = self.path.read_bytes()
        if raw[:4] != MODEL_MAGIC:
            raise BadMagic(raw[:4])
        if len(raw) < PREFIX.size:
            raise TruncatedModel('Файл модели короче префикса')
        _, version, header_len = PREFIX.unpack_from(raw)
        if version not in SUPPORTED_MODEL_VERSIONS:
            raise UnsupportedVersion(version)
        start = PREFIX.size
        if len(raw) < start + header_len:
            raise TruncatedModel('Заголовок модели обрезан')
        try:
            header = ModelHeader.model_validate_json(
                raw[start : start + header_len]
            )
        except ValidationError as exc:
            raise ModelLoadError(
                f'Некорректный заголовок модели: {exc.error_count()} ошибок'
            ) from exc
        payload = raw[start + header_len :]
        if len(payload) < header.payload_size:
            raise TruncatedModel(
                f'Ожидалось {header.payload_size} байт тензоров, '
                f'в файле {len(payload)}'
            )
        return header, payload

    def read_header(self) -> ModelHeader:
        header, _ = self._read()
        return header

    def load(self) -> SeparationModel:
        header, payload = self._read()
        tensors = {}
        for entry in header.tensors:
            chunk = payload[entry.offset : entry.offset + entry.nbytes]
            array = np.frombuffer(chunk, dtype=DTYPES[entry.dtype])
            tensors[entry.name] = array.reshape(entry.shape).astype(
                entry.dtype
            )
        try:
            mean = tensors.pop(WHITENING_MEAN)
            std = tensors.pop(WHITENING_STD)
            model = SeparationModel(
                frame_duration_s=header.frame_duration_s.to_fraction(),
                fs_hz=header.fs_hz,
                alpha=header.alpha,
                channel_mode=header.channel_mode,
                core_config=header.core_config,
                core_params=CoreParameters(tensors),
                whitening=WhiteningStats(
                    mean=mean,
                    std=std,
                    **header.whitening.model_dump(),
                ),
            )
        except (KeyError, ValueError) as exc:
            raise ModelLoadError(f'Несогласованная модель: {exc}') from exc
        logger.info('model_loaded', path=str(self.path), fs_hz=model.fs_hz)
        return model


def save_model(model: SeparationModel, path: Path | str) -> Path:
    return ModelRepository(path).save(model)


def load_model(path: Path | str) -> SeparationModel:
    return ModelRepository(path).load()
