import numpy as np
import pytest

from apps.pipeline.repository import (
    PREFIX,
    ModelRepository,
    load_model,
    save_model,
)
from apps.pipeline.services import with_estimated_whitening
from core.constants import MODEL_MAGIC
from core.exceptions import (
    BadMagic,
    ModelLoadError,
    TruncatedModel,
    UnsupportedVersion,
)


@pytest.fixture
def trained_like(mono_model, noise):
    return with_estimated_whitening(mono_model, [noise(8000)])


@pytest.mark.repository
class TestModelRepository:
    def test_round_trip_is_bit_exact(self, trained_like, tmp_path):
        path = save_model(trained_like, tmp_path / 'model.sfis')
        loaded = load_model(path)
        assert loaded.core_params.tobytes() == (
            trained_like.core_params.tobytes()
        )
        assert loaded.core_params.names() == trained_like.core_params.names()
        np.testing.assert_array_equal(
            loaded.whitening.mean, trained_like.whitening.mean
        )
        np.testing.assert_array_equal(
            loaded.whitening.std, trained_like.whitening.std
        )
        assert loaded.whitening.sample_count == (
            trained_like.whitening.sample_count
        )
        assert loaded.frame_duration_s == trained_like.frame_duration_s
        assert loaded.fs_hz == 8000
        assert loaded.channel_mode == trained_like.channel_mode
        assert loaded.core_config == trained_like.core_config

    def test_stereo_round_trip(self, stereo_model, tmp_path):
        path = save_model(stereo_model, tmp_path / 'stereo.sfis')
        loaded = load_model(path)
        assert loaded.core_params.tobytes() == (
            stereo_model.core_params.tobytes()
        )
        assert loaded.num_channels == 2

    def test_read_header(self, trained_like, tmp_path):
        repo = ModelRepository(tmp_path / 'model.sfis')
        repo.save(trained_like)
        header = repo.read_header()
        assert header.fs_hz == 8000
        assert header.frame_duration_s.numerator == 16
        assert header.frame_duration_s.denominator == 375
        assert [t.name for t in header.tensors][-2:] == [
            'whitening.mean',
            'whitening.std',
        ]

    def test_bad_magic(self, tmp_path):
        path = tmp_path / 'model.sfis'
        path.write_bytes(b'RIFF' + bytes(32))
        with pytest.raises(BadMagic):
            load_model(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / 'model.sfis'
        path.write_bytes(PREFIX.pack(MODEL_MAGIC, 2, 0))
        with pytest.raises(UnsupportedVersion):
            load_model(path)

    def test_truncated_payload(self, trained_like, tmp_path):
        path = save_model(trained_like, tmp_path / 'model.sfis')
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(TruncatedModel):
            load_model(path)

    def test_truncated_prefix(self, tmp_path):
        path = tmp_path / 'model.sfis'
        path.write_bytes(MODEL_MAGIC + b'\x01')
        with pytest.raises(TruncatedModel):
            load_model(path)

    def test_corrupt_header(self, tmp_path):
        path = tmp_path / 'model.sfis'
        header = b'{"fs_hz": "fast"}'
        path.write_bytes(PREFIX.pack(MODEL_MAGIC, 1, len(header)) + header)
        with pytest.raises(ModelLoadError):
            load_model(path)
