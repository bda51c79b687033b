"""Time-frequency machinery: STFT magnitudes, chroma folding, spectrogram images.

brute_force_dft computes the same magnitudes by direct summation and exists
as a correctness oracle for the FFT-based path; it must stay independent of
stft_magnitude.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .audio_io import AudioClip
from .errors import ClipTooShort

DEFAULT_WINDOW_SIZE = 2048
DEFAULT_HOP_SIZE = 512

# Chroma folds energy from A1 up to C8 onto the 12 pitch classes.
CHROMA_FMIN = 55.0
CHROMA_FMAX = 4186.0

PITCH_CLASSES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]


@dataclass(frozen=True)
class StftParams:
    window_size: int = DEFAULT_WINDOW_SIZE
    hop_size: int = DEFAULT_HOP_SIZE
    window_function: str = "hann"

    def __post_init__(self):
        if self.window_size <= 0 or self.window_size & (self.window_size - 1):
            raise ValueError("window_size must be a power of two")
        if not 0 < self.hop_size <= self.window_size:
            raise ValueError("hop_size must be in (0, window_size]")
        if self.window_function != "hann":
            raise ValueError("only the Hann window is supported")


@dataclass
class Spectrogram:
    magnitudes: np.ndarray  # [n_frames, n_bins]
    frame_times: np.ndarray
    bin_freqs: np.ndarray
    params: StftParams
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def hop_seconds(self) -> float:
        return self.params.hop_size / self.sample_rate


@dataclass
class Chromagram:
    energies: np.ndarray  # [n_frames, 12], pitch classes C..B


def hann_window(size: int) -> np.ndarray:
    # Periodic Hann, the usual STFT analysis window.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(size) / size)


def stft_magnitude(clip: AudioClip, params: StftParams | None = None) -> Spectrogram:
    """Magnitude STFT with frames centered via reflection padding.

    Frame t is centered on sample t*hop_size; frame count is ceil(len/hop).
    """
    params = params or StftParams()
    x = clip.samples
    if len(x) < params.window_size:
        raise ClipTooShort(
            f"clip has {len(x)} samples; at least {params.window_size} required"
        )
    w = params.window_size
    hop = params.hop_size
    half = w // 2
    padded = np.pad(x, half, mode="reflect")
    n_frames = -(-len(x) // hop)  # ceil
    window = hann_window(w)
    frames = np.empty((n_frames, w), dtype=np.float64)
    for t in range(n_frames):
        frames[t] = padded[t * hop : t * hop + w]
    mags = np.abs(np.fft.rfft(frames * window, axis=1))
    frame_times = np.arange(n_frames) * (hop / clip.sample_rate)
    bin_freqs = np.arange(w // 2 + 1) * (clip.sample_rate / w)
    return Spectrogram(
        magnitudes=mags,
        frame_times=frame_times,
        bin_freqs=bin_freqs,
        params=params,
        sample_rate=clip.sample_rate,
    )


def brute_force_dft(frame) -> np.ndarray:
    """|DFT| for bins 0..N/2 by direct summation. Test oracle; O(N^2)."""
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    if n < 1:
        raise ValueError("frame must be non-empty")
    k = np.arange(n // 2 + 1)
    angles = 2.0 * np.pi * np.outer(k, np.arange(n)) / n
    real = np.cos(angles) @ x
    imag = -np.sin(angles) @ x
    return np.hypot(real, imag)


def chroma(spec: Spectrogram, tuning_ref: float = 440.0) -> Chromagram:
    """Fold bin energies (magnitude squared) onto pitch classes.

    Each bin in [CHROMA_FMIN, CHROMA_FMAX] is assigned to the pitch class of
    its nearest equal-tempered semitone relative to tuning_ref.
    """
    freqs = spec.bin_freqs
    usable = (freqs >= CHROMA_FMIN) & (freqs <= CHROMA_FMAX)
    semitones = np.zeros(len(freqs), dtype=np.int64)
    semitones[usable] = np.round(12.0 * np.log2(freqs[usable] / tuning_ref)).astype(np.int64)
    # tuning_ref is pitch class A (index 9 with C = 0)
    classes = (9 + semitones) % 12
    energies = np.zeros((spec.n_frames, 12), dtype=np.float64)
    power = spec.magnitudes**2
    for pc in range(12):
        mask = usable & (classes == pc)
        if mask.any():
            energies[:, pc] = power[:, mask].sum(axis=1)
    return Chromagram(energies=energies)


# Fixed color ramp (dark purple -> teal -> yellow) so spectrogram PNGs are
# reproducible byte-for-byte across environments.
_PALETTE_ANCHORS = [
    (0.00, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.50, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.00, (253, 231, 37)),
]

DB_FLOOR = -80.0


def _build_palette() -> np.ndarray:
    positions = np.array([p for p, _ in _PALETTE_ANCHORS])
    colors = np.array([c for _, c in _PALETTE_ANCHORS], dtype=np.float64)
    t = np.linspace(0.0, 1.0, 256)
    palette = np.empty((256, 3), dtype=np.uint8)
    for ch in range(3):
        palette[:, ch] = np.round(np.interp(t, positions, colors[:, ch])).astype(np.uint8)
    return palette


_PALETTE = _build_palette()


def render_spectrogram_image(spec: Spectrogram) -> bytes:
    """Render a PNG: time left-to-right, frequency bottom-to-top, dB color scale."""
    mags = spec.magnitudes
    ref = mags.max()
    if ref > 0:
        db = 20.0 * np.log10(np.maximum(mags, ref * 10 ** (DB_FLOOR / 20.0)) / ref)
        level = (db - DB_FLOOR) / -DB_FLOOR
    else:
        level = np.zeros_like(mags)
    idx = np.round(level * 255.0).astype(np.uint8)
    # transpose to [bins, frames], flip so low frequencies sit at the bottom
    rgb = _PALETTE[idx.T[::-1]]
    img = Image.fromarray(rgb, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
