import numpy as np
import pytest

from apps.cnn.loss import mae_gradient, mae_loss
from apps.cnn.schemas import CoreConfig
from apps.pipeline.graph import PipelineGraph
from apps.pipeline.services import build_model, estimate_foreground
from apps.pipeline.types import ChannelMode
from core.exceptions import StateError

STEPS = (1e-5, 1e-6)
TOLERANCE = 1e-4


def _pattern(graph: PipelineGraph) -> np.ndarray:
    """Знаки ReLU скрытых блоков и активность порога дисперсии."""
    blocks = graph._cache.blocks
    return np.concatenate(
        [np.ravel(c.z > 0) for c in blocks[:-1]]
        + [np.ravel(c.norm.active) for c in blocks]
    )


def _evaluate(model, mixture, reference):
    graph = PipelineGraph(model)
    estimate = graph.forward(mixture)
    return mae_loss(estimate, reference), _pattern(graph)


def _check_every_parameter(model, mixture, rng) -> None:
    graph = PipelineGraph(model)
    start = graph.forward(mixture)
    base = _pattern(graph)
    u = rng.standard_normal(start.data.shape)
    # невязка не меньше 0.5: знак MAE не меняется при малом шаге
    reference = start.with_data(
        start.data + 0.5 * np.sign(u) * (1.0 + np.abs(u))
    )
    grads = graph.backward(mae_gradient(start, reference))

    params = model.core_params
    skipped = 0
    for name, value in params.items():
        for idx in np.ndindex(value.shape):
            errors = []
            for h in STEPS:
                up, down = params.copy(), params.copy()
                up[name][idx] += h
                down[name][idx] -= h
                loss_up, pattern_up = _evaluate(
                    model.with_params(up), mixture, reference
                )
                loss_down, pattern_down = _evaluate(
                    model.with_params(down), mixture, reference
                )
                if not (
                    np.array_equal(pattern_up, base)
                    and np.array_equal(pattern_down, base)
                ):
                    continue
                fd = (loss_up - loss_down) / (2 * h)
                an = float(grads[name][idx])
                errors.append(abs(fd - an) / max(abs(fd), abs(an), 1e-6))
            if not errors:
                skipped += 1
                continue
            assert min(errors) < TOLERANCE, (name, idx, errors)
    assert skipped < params.scalar_count() // 10


@pytest.fixture
def float64_model(mono_model):
    return mono_model.with_params(mono_model.core_params.astype(np.float64))


@pytest.fixture
def float64_stereo_model():
    model = build_model(
        fs_hz=8000,
        channel_mode=ChannelMode.STEREO,
        core_config=CoreConfig.for_channels(
            2, num_hidden_blocks=2, hidden_filters=4
        ),
        seed=7,
    )
    return model.with_params(model.core_params.astype(np.float64))


@pytest.mark.numerics
class TestPipelineGraph:
    def test_forward_matches_inference(self, mono_model, noise):
        mixture = noise(8000, seconds=0.25)
        estimate = PipelineGraph(mono_model).forward(mixture)
        expected = estimate_foreground(mono_model, mixture)
        np.testing.assert_array_equal(estimate.data, expected.data)

    def test_backward_without_forward_raises(self, mono_model):
        graph = PipelineGraph(mono_model)
        with pytest.raises(StateError):
            graph.backward(np.zeros((10, 1)))

    def test_reset_clears_cache(self, mono_model, noise):
        graph = PipelineGraph(mono_model)
        graph.forward(noise(8000, seconds=0.1))
        graph.reset()
        with pytest.raises(StateError):
            graph.backward(np.zeros((800, 1)))

    def test_every_parameter_matches_finite_difference(
        self, float64_model, noise, rng
    ):
        _check_every_parameter(
            float64_model, noise(8000, seconds=0.04), rng
        )

    def test_stereo_every_parameter_matches_finite_difference(
        self, float64_stereo_model, noise, rng
    ):
        # выходной блок с 4 каналами: нормировка со статистиками
        plan = float64_stereo_model.core_config.block_plan()
        assert plan[-1].out_channels == 4
        _check_every_parameter(
            float64_stereo_model, noise(8000, seconds=0.04, channels=2), rng
        )
