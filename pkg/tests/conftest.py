"""Shared synthesis fixtures: every test signal is generated, never loaded."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from soundsig.audio_io import AudioClip

SR = 22050

# Equal-tempered frequency of pitch class pc (C=0) in octave 4 (C4..B4).
C4 = 261.6255653005986


def pitch_freq(pc: int, octave: int = 4) -> float:
    return C4 * 2.0 ** ((octave - 4) + pc / 12.0)


def midi_freq(note: int) -> float:
    return 440.0 * 2.0 ** ((note - 69) / 12.0)


def sine(freq: float, seconds: float, sr: int = SR, amp: float = 0.5) -> np.ndarray:
    # cosine phase: reflection padding at the left edge continues the waveform
    n = int(round(seconds * sr))
    return amp * np.cos(2.0 * np.pi * freq * np.arange(n) / sr)


def faded(x: np.ndarray, sr: int = SR, fade_seconds: float = 0.02) -> np.ndarray:
    """Raised-cosine fade at both ends; avoids clicks and edge leakage."""
    x = x.copy()
    k = min(len(x) // 2, int(fade_seconds * sr))
    if k:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(k) / k)
        x[:k] *= ramp
        x[-k:] *= ramp[::-1]
    return x


def stationary_tone(sr: int = SR, seconds: float = 2.0, amp: float = 0.5) -> np.ndarray:
    """A tone whose period divides the 512-sample hop and whose length makes
    reflection padding exact, so every analysis frame sees identical samples."""
    period = 32  # f = sr/32 ≈ 689 Hz
    n = int(round(seconds * sr))
    n -= (n - 1) % (period // 2)  # length ≡ 1 (mod period/2) keeps the right edge even
    return amp * np.cos(2.0 * np.pi * np.arange(n) / period)


def clip(samples: np.ndarray, sr: int = SR) -> AudioClip:
    return AudioClip(samples=np.asarray(samples, dtype=np.float64), sample_rate=sr)


def click_track(bpm: float, seconds: float, sr: int = SR, amp: float = 0.9) -> np.ndarray:
    """Burst train on the beat grid; ground truth for tempo tests."""
    n = int(round(seconds * sr))
    x = np.zeros(n)
    burst_len = 64
    t = np.arange(burst_len)
    burst = amp * np.exp(-t / 16.0) * np.cos(2.0 * np.pi * 2000.0 * t / sr)
    period = 60.0 / bpm
    beat = 0.0
    while True:
        start = int(round(beat * sr))
        if start >= n:
            break
        end = min(n, start + burst_len)
        x[start:end] += burst[: end - start]
        beat += period
    return np.clip(x, -1.0, 1.0)


MAJOR_DEGREES = (0, 2, 4, 5, 7, 9, 11, 12)
MINOR_DEGREES = (0, 2, 3, 5, 7, 8, 10, 12)


def scale_clip(tonic_pc: int, mode: str, note_seconds: float = 0.3, sr: int = SR) -> np.ndarray:
    degrees = MAJOR_DEGREES if mode == "major" else MINOR_DEGREES
    notes = []
    for degree in degrees:
        freq = pitch_freq(tonic_pc) * 2.0 ** (degree / 12.0)
        notes.append(faded(sine(freq, note_seconds, sr=sr, amp=0.5), sr=sr))
    return np.concatenate(notes)


def triad(root_pc: int, quality: str, seconds: float, sr: int = SR, octave: int = 4) -> np.ndarray:
    intervals = (0, 4, 7) if quality == "maj" else (0, 3, 7)
    parts = [
        sine(pitch_freq(root_pc, octave) * 2.0 ** (i / 12.0), seconds, sr=sr, amp=0.3)
        for i in intervals
    ]
    # the long fade keeps AM sidebands well inside one semitone
    return faded(np.sum(parts, axis=0), sr=sr, fade_seconds=0.1)


def melody(notes: list[tuple[int, float]], sr: int = SR, amp: float = 0.5) -> np.ndarray:
    """notes: (midi_number, seconds) pairs rendered as faded pure tones."""
    return np.concatenate(
        [faded(sine(midi_freq(n), dur, sr=sr, amp=amp), sr=sr) for n, dur in notes]
    )


def symmetric_tones(freqs, seconds: float, sr: int = SR, amp: float = 0.3) -> np.ndarray:
    """Cosine mixture with frequencies snapped to the 1/(2*seconds) Hz grid and
    length seconds*sr + 1, so reflection padding continues every component
    exactly at both edges (each frame then sees leakage-free content)."""
    n = int(round(seconds * sr)) + 1
    grid = sr / (2.0 * (n - 1))
    t = np.arange(n) / sr
    x = np.zeros(n)
    for f in freqs:
        snapped = round(f / grid) * grid
        x += amp * np.cos(2.0 * np.pi * snapped * t)
    return x


def wav_bytes(
    samples: np.ndarray, sr: int = SR, sampwidth: int = 2, channels: int | None = None
) -> bytes:
    """Minimal RIFF/WAV writer, independent of the package's decoder."""
    data = np.asarray(samples)
    if data.ndim == 1:
        data = data[:, None]
    n_channels = channels or data.shape[1]
    if data.dtype.kind == "f":
        scaled = np.round(data * 32767.0).astype(np.int64)
    else:
        scaled = data.astype(np.int64)
    frames = bytearray()
    for row in scaled:
        for value in row:
            v = int(value)
            if sampwidth == 2:
                frames += struct.pack("<h", max(-32768, min(32767, v)))
            elif sampwidth == 3:
                v = max(-(2**23), min(2**23 - 1, v))
                frames += struct.pack("<i", v << 8)[1:]
            else:
                raise ValueError("sampwidth must be 2 or 3")
    byte_rate = sr * n_channels * sampwidth
    block_align = n_channels * sampwidth
    header = b"RIFF" + struct.pack("<I", 36 + len(frames)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, n_channels, sr, byte_rate, block_align, sampwidth * 8
    )
    header += b"data" + struct.pack("<I", len(frames))
    return bytes(header + frames)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
