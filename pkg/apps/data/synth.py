"""
Синтетический корпус «диалог + фон». Каждая дорожка задаётся как
непрерывная функция времени (гармоники, тоны, сумма синусоид на сетке
1/duration), поэтому рендер при любой частоте дискретизации описывает
один и тот же сигнал. Ниже опорной частоты 48 кГц каждая компонента
взвешивается характеристикой ресемплера, так что рендер при 8 кГц
совпадает с передискретизированным рендером при 48 кГц.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import structlog

from apps.data.resampling import lowpass_response
from apps.data.schemas import (
    BackgroundParams,
    CorpusConfig,
    Example,
    ForegroundParams,
    SynthSpec,
)
from apps.data.types import Split
from core.audio import AudioBuffer
from core.constants import CORPUS_REFERENCE_FS
from core.exceptions import InvalidArgument

logger = structlog.get_logger(__name__)

MAX_HARMONICS = 64
FORMANT_FLOOR = 0.05
ACTIVE_THRESHOLD = 0.5


@dataclass(frozen=True)
class _Segment:
    start: float
    stop: float
    f0: float
    vibrato_rate: float
    phases: np.ndarray


@dataclass(frozen=True)
class _Layout:
    """Все случайные параметры примера; от частоты не зависят."""

    segments: list[_Segment]
    formants: np.ndarray
    pan: np.ndarray
    noise_phases: np.ndarray
    tone_freqs: np.ndarray
    tone_rates: np.ndarray
    tone_phases: np.ndarray
    tone_am_phases: np.ndarray


def num_samples_for(duration_s: float, fs_hz: int) -> int:
    exact = Fraction(duration_s).limit_denominator(10**6) * fs_hz
    if exact.denominator != 1:
        raise InvalidArgument(
            f'duration_s · fs_hz должно быть целым: {duration_s} · {fs_hz}'
        )
    return int(exact)


def _noise_grid_size(bg: BackgroundParams, duration_s: float) -> int:
    """Число узлов сетки k/duration ниже верхней границы шума."""
    top = min(bg.max_hz, CORPUS_REFERENCE_FS / 2)
    return int(np.ceil(top * duration_s))


# ------------------------------- layout ------------------------------------


def _draw_segments(
    rng: np.random.Generator, fg: ForegroundParams, duration_s: float
) -> list[_Segment]:
    segments = []
    t = rng.uniform(*fg.pause_s) / 2
    while t < duration_s - 2 * fg.ramp_s:
        stop = min(t + rng.uniform(*fg.segment_s), duration_s)
        f0 = rng.uniform(*fg.f0_range_hz)
        rate = rng.uniform(*fg.vibrato_rate_hz)
        phases = rng.uniform(0, 2 * np.pi, MAX_HARMONICS)
        if stop - t >= 2 * fg.ramp_s:
            segments.append(_Segment(t, stop, f0, rate, phases))
        t = stop + rng.uniform(*fg.pause_s)
    return segments


def _draw_layout(spec: SynthSpec) -> _Layout:
    fg_seq, bg_seq = np.random.SeedSequence(spec.seed).spawn(2)
    fg_rng = np.random.default_rng(fg_seq)
    bg_rng = np.random.default_rng(bg_seq)
    fg, bg = spec.foreground, spec.background

    segments = _draw_segments(fg_rng, fg, spec.duration_s)
    formants = np.array(
        [fg_rng.uniform(lo, hi) for lo, hi in fg.formant_ranges_hz]
    )
    theta = fg_rng.uniform(0.3, 0.7) * np.pi / 2
    if spec.channels == 1:
        pan = np.ones(1)
    else:
        pan = np.sqrt(2.0) * np.array([np.cos(theta), np.sin(theta)])

    grid = _noise_grid_size(bg, spec.duration_s)
    return _Layout(
        segments=segments,
        formants=formants,
        pan=pan,
        noise_phases=bg_rng.uniform(0, 2 * np.pi, (spec.channels, grid)),
        tone_freqs=bg_rng.uniform(*bg.tone_range_hz, bg.num_tones),
        tone_rates=bg_rng.uniform(*bg.am_rate_hz, bg.num_tones),
        tone_phases=bg_rng.uniform(
            0, 2 * np.pi, (spec.channels, bg.num_tones)
        ),
        tone_am_phases=bg_rng.uniform(0, 2 * np.pi, bg.num_tones),
    )


# ------------------------------ rendering ----------------------------------


def _band_weight(freqs: np.ndarray, fs_hz: int) -> np.ndarray:
    """Характеристика ресемплера 48 кГц → fs; выше fs/2 равна нулю."""
    freqs = np.asarray(freqs, dtype=np.float64)
    weight = lowpass_response(CORPUS_REFERENCE_FS, fs_hz, freqs)
    weight[freqs >= fs_hz / 2] = 0.0
    return weight


def _gate(t: np.ndarray, seg: _Segment, ramp_s: float) -> np.ndarray:
    up = np.clip((t - seg.start) / ramp_s, 0.0, 1.0)
    down = np.clip((seg.stop - t) / ramp_s, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * np.minimum(up, down)))


def _activity(t: np.ndarray, layout: _Layout, ramp_s: float) -> np.ndarray:
    out = np.zeros_like(t)
    for seg in layout.segments:
        out += _gate(t, seg, ramp_s)
    return out


def _formant_envelope(
    freqs: np.ndarray, formants: np.ndarray, bandwidth: float
) -> np.ndarray:
    bumps = np.exp(-0.5 * ((freqs[:, None] - formants) / bandwidth) ** 2)
    return bumps.sum(axis=1) + FORMANT_FLOOR


def _render_foreground(
    t: np.ndarray, fs_hz: int, layout: _Layout, fg: ForegroundParams
) -> np.ndarray:
    out = np.zeros_like(t)
    depth = fg.vibrato_depth
    for seg in layout.segments:
        inside = (t >= seg.start) & (t <= seg.stop)
        if not np.any(inside):
            continue
        tau = t[inside] - seg.start
        # фаза основного тона: интеграл от f0·(1 + depth·sin(2π·rate·τ))
        base = (
            2.0
            * np.pi
            * seg.f0
            * (
                tau
                + depth
                * (1.0 - np.cos(2.0 * np.pi * seg.vibrato_rate * tau))
                / (2.0 * np.pi * seg.vibrato_rate)
            )
        )
        count = int(fg.max_harmonic_hz // (seg.f0 * (1.0 + depth)))
        count = max(1, min(count, MAX_HARMONICS))
        harmonics = np.arange(1, count + 1)
        amps = _formant_envelope(
            harmonics * seg.f0, layout.formants, fg.formant_bandwidth_hz
        ) / np.sqrt(harmonics)
        amps *= fg.level_rms * np.sqrt(2.0) / np.sqrt(np.sum(amps**2))
        amps *= _band_weight(harmonics * seg.f0, fs_hz)
        wave = np.zeros_like(tau)
        for h, amp in zip(harmonics, amps):
            if amp:
                wave += amp * np.sin(h * base + seg.phases[h - 1])
        out[inside] += wave * _gate(t[inside], seg, fg.ramp_s)
    return out


@lru_cache(maxsize=16)
def _noise_amplitudes(
    bg: BackgroundParams, duration_s: float, grid: int, fs_hz: int
) -> np.ndarray:
    """Амплитуды узлов сетки; одинаковы для всех примеров корпуса."""
    k = np.arange(int(np.ceil(bg.min_hz * duration_s)), grid)
    freqs = k / duration_s
    exponent = bg.slope_db_per_octave / (20.0 * np.log10(2.0))
    amps = (freqs / 1000.0) ** exponent
    amps *= bg.level_rms / np.sqrt(np.sum(amps**2) / 2.0)
    return amps * _band_weight(freqs, fs_hz)


def _render_noise(
    num_samples: int,
    fs_hz: int,
    duration_s: float,
    layout: _Layout,
    bg: BackgroundParams,
) -> np.ndarray:
    """Сумма синусоид на сетке k/duration со спадом slope дБ/октаву."""
    grid = layout.noise_phases.shape[1]
    k = np.arange(int(np.ceil(bg.min_hz * duration_s)), grid)
    amps = _noise_amplitudes(bg, duration_s, grid, fs_hz)
    keep = amps > 0
    k, amps = k[keep], amps[keep]

    channels = layout.noise_phases.shape[0]
    out = np.empty((num_samples, channels))
    for c in range(channels):
        spectrum = np.zeros(num_samples // 2 + 1, dtype=complex)
        spectrum[k] = (
            amps * (num_samples / 2.0) * np.exp(1j * layout.noise_phases[c, k])
        )
        out[:, c] = np.fft.irfft(spectrum, n=num_samples)
    return out


def _render_tones(
    t: np.ndarray, fs_hz: int, layout: _Layout, bg: BackgroundParams
) -> np.ndarray:
    """
    AM-тон раскладывается на несущую и две боковые, каждая взвешивается
    отдельно, чтобы рендер оставался согласованным между частотами.
    """
    channels = layout.tone_phases.shape[0]
    out = np.zeros((t.size, channels))
    amp = bg.level_rms * np.sqrt(2.0) * 10 ** (bg.tone_level_db / 20.0)
    m = bg.am_depth
    for j, (f, r) in enumerate(zip(layout.tone_freqs, layout.tone_rates)):
        psi = layout.tone_am_phases[j]
        w_c, w_up, w_down = _band_weight(np.array([f, f + r, f - r]), fs_hz)
        for c in range(channels):
            phi = layout.tone_phases[c, j]
            out[:, c] += amp * (
                w_c * np.cos(2 * np.pi * f * t + phi)
                + 0.5 * m * w_up * np.sin(2 * np.pi * (f + r) * t + psi + phi)
                - 0.5
                * m
                * w_down
                * np.sin(2 * np.pi * (f - r) * t + phi - psi)
            )
    return out


@dataclass(frozen=True)
class _Stems:
    foreground: np.ndarray
    background: np.ndarray
    activity: np.ndarray


def _render(spec: SynthSpec, layout: _Layout, fs_hz: int) -> _Stems:
    num_samples = num_samples_for(spec.duration_s, fs_hz)
    t = np.arange(num_samples) / fs_hz
    mono = _render_foreground(t, fs_hz, layout, spec.foreground)
    background = _render_noise(
        num_samples, fs_hz, spec.duration_s, layout, spec.background
    ) + _render_tones(t, fs_hz, layout, spec.background)
    return _Stems(
        foreground=mono[:, None] * layout.pan[None, :],
        background=background,
        activity=_activity(t, layout, spec.foreground.ramp_s),
    )


def mix_gain(stems: _Stems, snr_db: float) -> float:
    """Усиление фона, дающее snr_db на участках с активной речью."""
    active = stems.activity >= ACTIVE_THRESHOLD
    if not np.any(active):
        active = np.ones_like(active)
    fg_energy = np.sum(stems.foreground[active] ** 2)
    bg_energy = np.sum(stems.background[active] ** 2)
    if fg_energy == 0 or bg_energy == 0:
        return 1.0
    return float(np.sqrt(fg_energy / (bg_energy * 10 ** (snr_db / 10))))


def synth_example(spec: SynthSpec) -> Example:
    layout = _draw_layout(spec)
    stems = _render(spec, layout, spec.fs_hz)
    reference = (
        stems
        if spec.fs_hz == CORPUS_REFERENCE_FS
        else _render(spec, layout, CORPUS_REFERENCE_FS)
    )
    gain = mix_gain(reference, spec.mix_snr_db)
    background = gain * stems.background
    return Example(
        mixture=AudioBuffer(
            data=stems.foreground + background, fs_hz=spec.fs_hz
        ),
        foreground=AudioBuffer(data=stems.foreground, fs_hz=spec.fs_hz),
        background=AudioBuffer(data=background, fs_hz=spec.fs_hz),
        activity=stems.activity,
    )


# -------------------------------- corpus -----------------------------------


def item_specs(
    config: CorpusConfig, fs_hz: int, split: Split
) -> list[SynthSpec]:
    """Сиды и SNR элементов выводятся из (seed, split, index)."""
    specs = []
    lo, hi = config.mix_snr_db_range
    for index in range(config.size(split)):
        state = np.random.SeedSequence(
            [config.seed, split.code, index]
        ).generate_state(2)
        specs.append(
            SynthSpec(
                seed=int(state[0]),
                duration_s=config.duration_s,
                fs_hz=fs_hz,
                channels=config.channels,
                mix_snr_db=lo + (hi - lo) * float(state[1]) / 2**32,
                foreground=config.foreground,
                background=config.background,
            )
        )
    return specs


def generate_corpus(
    config: CorpusConfig, fs_hz: int, split: Split, jobs: int = 1
) -> list[Example]:
    specs = item_specs(config, fs_hz, split)
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            examples = list(pool.map(synth_example, specs))
    else:
        examples = [synth_example(spec) for spec in specs]
    logger.info(
        'corpus_generated',
        split=split.value,
        fs_hz=fs_hz,
        items=len(examples),
        jobs=jobs,
    )
    return examples
