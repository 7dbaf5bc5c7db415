import numpy as np
import pytest

from apps.cnn.loss import mae_gradient, mae_loss
from apps.cnn.optim import adadelta_step
from apps.cnn.schemas import AdadeltaState, CoreParameters
from core.audio import AudioBuffer
from core.exceptions import InvalidArgument, ShapeError


def _scalar(value: float) -> CoreParameters:
    return CoreParameters({'x': np.array(value)})


@pytest.mark.training
class TestAdadelta:
    def test_first_step_value(self):
        params = _scalar(0.0)
        state = AdadeltaState.zeros(params)
        new, state = adadelta_step(params, _scalar(1.0), state)
        assert float(new['x']) == pytest.approx(-0.004472, abs=1e-6)
        assert state.step == 1

    def test_inputs_are_not_modified(self):
        params = _scalar(0.5)
        state = AdadeltaState.zeros(params)
        adadelta_step(params, _scalar(1.0), state)
        assert float(params['x']) == 0.5
        assert float(state.square_avg['x']) == 0.0

    def test_minimizes_parabola(self):
        params = _scalar(1.0)
        state = AdadeltaState.zeros(params)
        values = []
        for _ in range(200):
            grads = _scalar(2.0 * float(params['x']))
            params, state = adadelta_step(params, grads, state)
            values.append(float(params['x']) ** 2)
        assert abs(float(params['x'])) < 0.5
        assert np.all(np.diff(values[10:]) <= 0.0)

    def test_zero_gradient_from_rest(self):
        params = _scalar(0.7)
        state = AdadeltaState.zeros(params)
        new, state = adadelta_step(params, _scalar(0.0), state)
        assert float(new['x']) == 0.7
        assert float(state.square_avg['x']) == 0.0
        assert float(state.acc_delta['x']) == 0.0

    def test_zero_gradient_only_decays_state(self):
        params = _scalar(0.7)
        state = AdadeltaState.zeros(params)
        params, state = adadelta_step(params, _scalar(1.0), state)
        new, decayed = adadelta_step(params, _scalar(0.0), state)
        assert float(new['x']) == float(params['x'])
        for name in ('square_avg', 'acc_delta'):
            before = float(getattr(state, name)['x'])
            after = float(getattr(decayed, name)['x'])
            assert after == pytest.approx(state.rho * before)

    def test_keeps_parameter_dtype(self):
        params = CoreParameters({'w': np.ones(3, dtype=np.float32)})
        grads = CoreParameters({'w': np.ones(3)})
        new, _ = adadelta_step(params, grads, AdadeltaState.zeros(params))
        assert new['w'].dtype == np.float32

    def test_name_mismatch_raises(self):
        params = _scalar(0.0)
        grads = CoreParameters({'y': np.array(1.0)})
        with pytest.raises(ShapeError):
            adadelta_step(params, grads, AdadeltaState.zeros(params))


@pytest.mark.training
class TestMaeLoss:
    def test_value_and_gradient(self):
        est = AudioBuffer(data=[1.0, -2.0, 0.5, 0.0], fs_hz=8000)
        ref = AudioBuffer(data=[0.0, 0.0, 0.5, 1.0], fs_hz=8000)
        assert mae_loss(est, ref) == pytest.approx(1.0)
        np.testing.assert_array_equal(
            mae_gradient(est, ref)[:, 0], [0.25, -0.25, 0.0, -0.25]
        )

    def test_rate_mismatch_raises(self):
        a = AudioBuffer(data=np.zeros(4), fs_hz=8000)
        b = AudioBuffer(data=np.zeros(4), fs_hz=16000)
        with pytest.raises(InvalidArgument):
            mae_loss(a, b)
