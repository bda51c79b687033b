"""Audio decoding and track metadata.

Uploads follow the naming convention "SongTitle_ArtistName.<ext>"; the split
happens at the first underscore so artist names may contain dots (e.g.
"July_NoahCyrusft.LeonBridges.mp3"). Decoded audio is mono float64 in
[-1, 1] at the file's native rate; analysis happens at ANALYSIS_RATE.
"""

from __future__ import annotations

import io
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import CorruptFile, MalformedFilename, UnsupportedFormat, UploadTooLarge

SUPPORTED_EXTENSIONS = (".wav", ".mp3")

# Canonical analysis rate: mono 22.05 kHz, a common MIR default.
ANALYSIS_RATE = 22050

# Uploads longer than this are rejected to bound analysis cost.
MAX_DURATION_SECONDS = 600.0


@dataclass
class TrackMeta:
    title: str
    artist: str
    original_filename: str

    def __post_init__(self):
        if not self.title or not self.artist:
            raise MalformedFilename("title and artist must be non-empty")

    @property
    def display_name(self) -> str:
        return f"{self.title}_{self.artist}"


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def parse_track_filename(filename: str) -> TrackMeta:
    """Split an uploaded file name into title and artist at the first underscore."""
    if "/" in filename or "\\" in filename:
        raise MalformedFilename(f"expected a bare file name, got {filename!r}")
    root, ext = os.path.splitext(filename)
    if ext.lower() not in SUPPORTED_EXTENSIONS:
        raise MalformedFilename(
            f"unsupported extension {ext!r}; supported: {', '.join(SUPPORTED_EXTENSIONS)}"
        )
    if "_" not in root:
        raise MalformedFilename(f"no underscore separator in {filename!r}")
    title, artist = root.split("_", 1)
    if not title or not artist:
        raise MalformedFilename(f"empty title or artist in {filename!r}")
    return TrackMeta(title=title, artist=artist, original_filename=filename)


def _normalize_pcm(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        return data.astype(np.float64) / 2147483648.0
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype in (np.float32, np.float64):
        return np.clip(data.astype(np.float64), -1.0, 1.0)
    raise UnsupportedFormat(f"unsupported WAV sample format {data.dtype}")


def _decode_wav(data: bytes) -> AudioClip:
    try:
        rate, samples = wavfile.read(io.BytesIO(data))
    except Exception as exc:
        raise CorruptFile(f"could not parse WAV data: {exc}") from exc
    if samples.size == 0:
        raise CorruptFile("WAV file contains no samples")
    samples = _normalize_pcm(samples)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples=samples, sample_rate=int(rate))


def _decode_via_command(data: bytes, suffix: str, command_template: str) -> AudioClip:
    # The external decoder writes a WAV we can parse natively.
    with tempfile.TemporaryDirectory(prefix="soundsig-decode-") as tmp:
        in_path = os.path.join(tmp, f"input{suffix}")
        out_path = os.path.join(tmp, "output.wav")
        with open(in_path, "wb") as fh:
            fh.write(data)
        cmd = [
            part.replace("{input}", in_path).replace("{output}", out_path)
            for part in shlex.split(command_template)
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=300)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise CorruptFile(f"external decoder failed to run: {exc}") from exc
        if proc.returncode != 0 or not os.path.exists(out_path):
            detail = proc.stderr.decode(errors="replace")[-500:]
            raise CorruptFile(f"external decoder failed (exit {proc.returncode}): {detail}")
        with open(out_path, "rb") as fh:
            return _decode_wav(fh.read())


def decode_audio(data: bytes, format_hint: str, mp3_command: str | None = None) -> AudioClip:
    """Decode an audio blob to a mono clip at its native rate.

    format_hint is an extension ("wav", ".mp3") or a filename carrying one.
    MP3 support requires an external decoder command configured with {input}
    and {output} placeholders.
    """
    if not data:
        raise CorruptFile("empty audio blob")
    base, dot_ext = os.path.splitext(format_hint)
    ext = (dot_ext or base).lower().lstrip(".")  # ".wav" splits as a dotfile
    if ext == "wav":
        clip = _decode_wav(data)
    elif ext == "mp3":
        if not mp3_command:
            raise UnsupportedFormat(
                "MP3 decoding requires an external decoder command (audio.mp3_decoder in config)"
            )
        clip = _decode_via_command(data, ".mp3", mp3_command)
    else:
        raise UnsupportedFormat(f"unsupported audio format {format_hint!r}")
    if clip.duration > MAX_DURATION_SECONDS:
        raise UploadTooLarge(
            f"clip is {clip.duration:.0f} s; maximum is {MAX_DURATION_SECONDS:.0f} s"
        )
    return clip


def resample_to_analysis_rate(clip: AudioClip, target_rate: int = ANALYSIS_RATE) -> AudioClip:
    """Resample with band-limited polyphase interpolation; identity when rates match."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if clip.sample_rate == target_rate:
        return clip
    g = math.gcd(target_rate, clip.sample_rate)
    resampled = resample_poly(clip.samples, target_rate // g, clip.sample_rate // g)
    return AudioClip(samples=np.clip(resampled, -1.0, 1.0), sample_rate=target_rate)
