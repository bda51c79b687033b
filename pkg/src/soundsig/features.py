"""The nine per-track features, grouped into four categories.

Tempo/rhythm: BPM (with a half/double-time ambiguity flag) and pulse clarity.
Harmony/melody: key, mode, and key strength via Krumhansl-Schmuckler profiles.
Timbre/texture: spectral centroid, bandwidth, and flux.
Energy/dynamics: RMS energy and an A-weighted Stevens-law loudness sum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .audio_io import ANALYSIS_RATE, AudioClip, TrackMeta, resample_to_analysis_rate
from .dsp import (
    PITCH_CLASSES,
    Chromagram,
    Spectrogram,
    StftParams,
    chroma,
    render_spectrogram_image,
    stft_magnitude,
)
from .errors import ClipTooShort, KeyUndefined, NoBeatDetected

BPM_MIN = 40.0
BPM_MAX = 200.0

# A candidate lag at half/double tempo within this fraction of the winner's
# autocorrelation marks the estimate as octave-ambiguous.
OCTAVE_AMBIGUITY_RATIO = 0.9

# Krumhansl-Schmuckler pitch-class salience profiles, C-rooted.
KS_MAJOR_PROFILE = np.array(
    [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88]
)
KS_MINOR_PROFILE = np.array(
    [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17]
)

STEVENS_EXPONENT = 0.67


@dataclass
class TempoRhythm:
    bpm: float
    pulse_clarity: float
    octave_ambiguous: bool


@dataclass
class TempoEstimate:
    """Raw tempo result: the BPM, its autocorrelation lag, and the octave flag."""

    bpm: float
    lag: int
    octave_ambiguous: bool


@dataclass
class HarmonyMelody:
    key: str
    mode: str
    key_strength: float


@dataclass
class TimbreTexture:
    spectral_centroid_mean: float
    spectral_bandwidth_mean: float
    spectral_flux_mean: float


@dataclass
class EnergyDynamics:
    rms_energy: float
    loudness: float


@dataclass
class TrackFeatures:
    meta: TrackMeta
    tempo_rhythm: TempoRhythm | None
    harmony: HarmonyMelody | None
    timbre: TimbreTexture
    energy: EnergyDynamics
    spectrogram_image_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "meta": {
                "title": self.meta.title,
                "artist": self.meta.artist,
                "original_filename": self.meta.original_filename,
            },
            "tempo_rhythm": None
            if self.tempo_rhythm is None
            else {
                "bpm": self.tempo_rhythm.bpm,
                "pulse_clarity": self.tempo_rhythm.pulse_clarity,
                "octave_ambiguous": self.tempo_rhythm.octave_ambiguous,
            },
            "harmony": None
            if self.harmony is None
            else {
                "key": self.harmony.key,
                "mode": self.harmony.mode,
                "key_strength": self.harmony.key_strength,
            },
            "timbre": {
                "spectral_centroid_mean": self.timbre.spectral_centroid_mean,
                "spectral_bandwidth_mean": self.timbre.spectral_bandwidth_mean,
                "spectral_flux_mean": self.timbre.spectral_flux_mean,
            },
            "energy": {
                "rms_energy": self.energy.rms_energy,
                "loudness": self.energy.loudness,
            },
            "spectrogram_image_ref": self.spectrogram_image_ref,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrackFeatures":
        tempo = d.get("tempo_rhythm")
        harmony = d.get("harmony")
        return cls(
            meta=TrackMeta(**d["meta"]),
            tempo_rhythm=None if tempo is None else TempoRhythm(**tempo),
            harmony=None if harmony is None else HarmonyMelody(**harmony),
            timbre=TimbreTexture(**d["timbre"]),
            energy=EnergyDynamics(**d["energy"]),
            spectrogram_image_ref=d.get("spectrogram_image_ref"),
        )


def onset_strength(spec: Spectrogram) -> np.ndarray:
    """Half-wave-rectified spectral difference per frame; first frame is 0."""
    diff = np.diff(spec.magnitudes, axis=0)
    env = np.maximum(diff, 0.0).sum(axis=1)
    return np.concatenate([[0.0], env])


def _autocorrelation(envelope: np.ndarray) -> np.ndarray:
    t = len(envelope)
    return np.correlate(envelope, envelope, mode="full")[t - 1 :]


def _band_lags(n_lags: int, hop_seconds: float) -> tuple[int, int]:
    lag_min = max(1, int(np.ceil(60.0 / (BPM_MAX * hop_seconds))))
    lag_max = min(n_lags - 1, int(np.floor(60.0 / (BPM_MIN * hop_seconds))))
    return lag_min, lag_max


def _parabolic_refine(r: np.ndarray, lag: int) -> float:
    if lag <= 0 or lag >= len(r) - 1:
        return float(lag)
    a, b, c = r[lag - 1], r[lag], r[lag + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(lag)
    delta = 0.5 * (a - c) / denom
    return float(lag) + float(np.clip(delta, -0.5, 0.5))


# Short Hann kernel applied to the envelope before autocorrelation. Onset
# spikes quantized to frames split their autocorrelation peak when the beat
# period is a fractional number of frames; widening them restores it.
_ENVELOPE_SMOOTHING_KERNEL = np.hanning(7)[1:-1] / np.hanning(7)[1:-1].sum()


def estimate_tempo(onsets: np.ndarray, hop_seconds: float) -> TempoEstimate:
    """Pick the autocorrelation lag in the 40-200 BPM band with maximal score.

    The onset envelope is smoothed and mean-centered before autocorrelation so
    frame quantization and constant background do not mask the periodic
    structure. The octave flag goes up when the lag at half or double tempo
    scores within 90% of the winner.
    """
    onsets = np.asarray(onsets, dtype=np.float64)
    if len(onsets) < 2.0 / hop_seconds:
        raise ValueError("need at least 2 s of onset envelope for tempo estimation")
    smoothed = np.convolve(onsets, _ENVELOPE_SMOOTHING_KERNEL, mode="same")
    centered = smoothed - smoothed.mean()
    r = _autocorrelation(centered)
    if r[0] <= 0.0:
        raise NoBeatDetected("silent or constant onset envelope")
    r_norm = r / r[0]
    lag_min, lag_max = _band_lags(len(r_norm), hop_seconds)
    if lag_min > lag_max:
        raise NoBeatDetected("envelope too short for the tempo band")
    band = r_norm[lag_min : lag_max + 1]
    best_lag = lag_min + int(np.argmax(band))
    baseline = float(np.mean(np.abs(r_norm[1:])))
    if r_norm[best_lag] < 3.0 * baseline:
        raise NoBeatDetected("no lag stands out from the self-similarity baseline")
    refined = _parabolic_refine(r_norm, best_lag)
    bpm = float(np.clip(60.0 / (refined * hop_seconds), BPM_MIN, BPM_MAX))

    ambiguous = False
    best_score = r_norm[best_lag]
    for factor in (0.5, 2.0):  # half BPM = double lag and vice versa
        alt = int(round(best_lag / factor))
        candidates = [alt - 1, alt, alt + 1]
        scores = [r_norm[c] for c in candidates if lag_min <= c <= lag_max and c != best_lag]
        if scores and max(scores) >= OCTAVE_AMBIGUITY_RATIO * best_score:
            ambiguous = True
    return TempoEstimate(bpm=bpm, lag=best_lag, octave_ambiguous=ambiguous)


def pulse_clarity(onsets: np.ndarray, chosen_lag: int, hop_seconds: float) -> float:
    """Autocorrelation at the chosen lag relative to the tempo band's mean.

    Uses the raw (uncentered) envelope so an unpeaked envelope scores about 1;
    a strongly periodic envelope scores well above it.
    """
    onsets = np.asarray(onsets, dtype=np.float64)
    r = _autocorrelation(onsets)
    if r[0] <= 0.0:
        return 0.0
    r_norm = r / r[0]
    lag_min, lag_max = _band_lags(len(r_norm), hop_seconds)
    if lag_min > lag_max or not lag_min <= chosen_lag <= lag_max:
        return 0.0
    band_mean = float(np.mean(r_norm[lag_min : lag_max + 1]))
    if band_mean <= 0.0:
        return 0.0
    return float(r_norm[chosen_lag] / band_mean)


def correlate_key_profiles(mean_chroma: np.ndarray) -> tuple[str, str, float]:
    """Pearson-correlate a mean chroma vector against all 24 key profiles."""
    best = None
    for mode, profile in (("major", KS_MAJOR_PROFILE), ("minor", KS_MINOR_PROFILE)):
        for tonic in range(12):
            rotated = np.roll(profile, tonic)
            corr = float(np.corrcoef(mean_chroma, rotated)[0, 1])
            if best is None or corr > best[2]:
                best = (PITCH_CLASSES[tonic], mode, corr)
    return best


def estimate_key(chromagram: Chromagram) -> HarmonyMelody:
    mean_chroma = chromagram.energies.mean(axis=0)
    if not np.any(mean_chroma > 0.0):
        raise KeyUndefined("chromagram carries no energy")
    if np.allclose(mean_chroma, mean_chroma[0]):
        raise KeyUndefined("flat chroma has no defined key")
    key, mode, strength = correlate_key_profiles(mean_chroma)
    return HarmonyMelody(key=key, mode=mode, key_strength=strength)


def spectral_centroid_mean(spec: Spectrogram) -> float:
    mags = spec.magnitudes
    totals = mags.sum(axis=1)
    voiced = totals > 0.0
    if not voiced.any():
        return 0.0
    centroids = (mags[voiced] * spec.bin_freqs).sum(axis=1) / totals[voiced]
    return float(centroids.mean())


def spectral_bandwidth_mean(spec: Spectrogram) -> float:
    mags = spec.magnitudes
    totals = mags.sum(axis=1)
    voiced = totals > 0.0
    if not voiced.any():
        return 0.0
    centroids = (mags[voiced] * spec.bin_freqs).sum(axis=1) / totals[voiced]
    spread = (spec.bin_freqs[None, :] - centroids[:, None]) ** 2
    variances = (mags[voiced] * spread).sum(axis=1) / totals[voiced]
    return float(np.sqrt(variances).mean())


def spectral_flux_mean(spec: Spectrogram) -> float:
    mags = spec.magnitudes
    if spec.n_frames < 2:
        raise ValueError("spectral flux needs at least 2 frames")
    totals = mags.sum(axis=1, keepdims=True)
    normed = np.divide(mags, totals, out=np.zeros_like(mags), where=totals > 0.0)
    flux = np.linalg.norm(np.diff(normed, axis=0), axis=1)
    return float(flux.mean())


def frame_flux(spec: Spectrogram) -> np.ndarray:
    """Per-transition flux values (length n_frames - 1), same normalization."""
    totals = spec.magnitudes.sum(axis=1, keepdims=True)
    normed = np.divide(
        spec.magnitudes, totals, out=np.zeros_like(spec.magnitudes), where=totals > 0.0
    )
    return np.linalg.norm(np.diff(normed, axis=0), axis=1)


def rms_energy(clip: AudioClip) -> float:
    if len(clip.samples) == 0:
        raise ValueError("clip is empty")
    return float(np.sqrt(np.mean(clip.samples**2)))


def a_weighting_energy_gain(freqs: np.ndarray) -> np.ndarray:
    """Squared A-weighting amplitude response (IEC 61672), 0 dB at 1 kHz."""
    f2 = np.asarray(freqs, dtype=np.float64) ** 2
    num = (12194.0**2) * f2**2
    den = (
        (f2 + 20.6**2)
        * np.sqrt((f2 + 107.7**2) * (f2 + 737.9**2))
        * (f2 + 12194.0**2)
    )
    ra = np.divide(num, den, out=np.zeros_like(f2), where=den > 0.0)
    # +2.00 dB normalization so the response is exactly 1 at 1 kHz
    return (ra * 10 ** (2.0 / 20.0)) ** 2


def loudness(clip: AudioClip, params: StftParams | None = None, spec: Spectrogram | None = None) -> float:
    """A-weighted frame energies through Stevens' power law, summed over frames."""
    if spec is None:
        spec = stft_magnitude(clip, params or StftParams())
    gains = a_weighting_energy_gain(spec.bin_freqs)
    frame_energy = (spec.magnitudes**2 * gains).sum(axis=1)
    return float(np.sum(frame_energy**STEVENS_EXPONENT))


def extract_all(
    clip: AudioClip,
    meta: TrackMeta,
    params: StftParams | None = None,
    analysis_rate: int = ANALYSIS_RATE,
) -> tuple[TrackFeatures, bytes]:
    """Run the full pipeline for one track.

    Returns the feature record (spectrogram_image_ref unset) plus the rendered
    spectrogram PNG; the caller decides where the image lives. Tempo and key
    failures become absent categories instead of failing the extraction.
    """
    if clip.duration < 2.0:
        raise ClipTooShort("need at least 2 s of audio for feature extraction")
    params = params or StftParams()
    clip = resample_to_analysis_rate(clip, analysis_rate)
    spec = stft_magnitude(clip, params)
    png = render_spectrogram_image(spec)

    onsets = onset_strength(spec)
    tempo_rhythm: TempoRhythm | None
    try:
        estimate = estimate_tempo(onsets, spec.hop_seconds)
        clarity = pulse_clarity(onsets, estimate.lag, spec.hop_seconds)
        tempo_rhythm = TempoRhythm(
            bpm=estimate.bpm,
            pulse_clarity=clarity,
            octave_ambiguous=estimate.octave_ambiguous,
        )
    except NoBeatDetected:
        tempo_rhythm = None

    harmony: HarmonyMelody | None
    try:
        harmony = estimate_key(chroma(spec))
    except KeyUndefined:
        harmony = None

    timbre = TimbreTexture(
        spectral_centroid_mean=spectral_centroid_mean(spec),
        spectral_bandwidth_mean=spectral_bandwidth_mean(spec),
        spectral_flux_mean=spectral_flux_mean(spec),
    )
    energy = EnergyDynamics(
        rms_energy=rms_energy(clip),
        loudness=loudness(clip, spec=spec),
    )
    features = TrackFeatures(
        meta=meta,
        tempo_rhythm=tempo_rhythm,
        harmony=harmony,
        timbre=timbre,
        energy=energy,
    )
    return features, png
