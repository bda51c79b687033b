"""Stem separation through an external-process adapter.

The separator itself (e.g. a neural source-separation model) runs as an
external command configured with {input} and {output_dir} placeholders; this
module handles invocation, output collection, and validation only.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field

from .audio_io import decode_audio
from .errors import AdapterFailed, AdapterNotConfigured, CorruptFile, UnsupportedFormat

DEFAULT_STEM_NAMES = ("vocals", "drums", "bass", "other")

# Duration of each produced stem must match the source within this fraction.
DURATION_TOLERANCE = 0.01

_cap_lock = threading.Lock()
_process_slots = threading.BoundedSemaphore(2)


def configure_stem_concurrency(limit: int) -> None:
    """Set the global cap on concurrently running separator processes."""
    global _process_slots
    if limit < 1:
        raise ValueError("concurrency limit must be >= 1")
    with _cap_lock:
        _process_slots = threading.BoundedSemaphore(limit)


@dataclass
class SeparationAdapter:
    command_template: str
    stem_names: tuple[str, ...] = DEFAULT_STEM_NAMES
    output_extension: str = ".wav"
    timeout_seconds: float = 600.0

    def __post_init__(self):
        if "{input}" not in self.command_template or "{output_dir}" not in self.command_template:
            raise AdapterNotConfigured(
                "separation command must contain {input} and {output_dir} placeholders"
            )
        if not self.stem_names:
            raise AdapterNotConfigured("at least one stem name must be configured")


@dataclass
class StemSet:
    stems: dict = field(default_factory=dict)  # stem name -> WAV bytes


def separate_stems(
    audio_bytes: bytes,
    format_hint: str,
    adapter: SeparationAdapter | None,
    mp3_command: str | None = None,
) -> StemSet:
    """Run the configured separator and collect its stem files.

    Each produced stem must decode and match the source duration within 1%.
    """
    if adapter is None:
        raise AdapterNotConfigured("no stem separation adapter configured")
    source = decode_audio(audio_bytes, format_hint, mp3_command=mp3_command)

    suffix = "." + format_hint.rsplit(".", 1)[-1].lower()
    with tempfile.TemporaryDirectory(prefix="soundsig-stems-") as tmp:
        in_path = os.path.join(tmp, f"input{suffix}")
        out_dir = os.path.join(tmp, "out")
        os.makedirs(out_dir)
        with open(in_path, "wb") as fh:
            fh.write(audio_bytes)
        cmd = [
            part.replace("{input}", in_path).replace("{output_dir}", out_dir)
            for part in shlex.split(adapter.command_template)
        ]
        with _process_slots:
            try:
                proc = subprocess.run(
                    cmd, capture_output=True, timeout=adapter.timeout_seconds
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise AdapterFailed(f"separator process failed to run: {exc}") from exc
        output = (proc.stdout + proc.stderr).decode(errors="replace")
        if proc.returncode != 0:
            raise AdapterFailed(
                f"separator exited with status {proc.returncode}", process_output=output
            )

        stems = {}
        for name in adapter.stem_names:
            path = os.path.join(out_dir, name + adapter.output_extension)
            if not os.path.exists(path):
                raise AdapterFailed(
                    f"separator produced no {name!r} stem", process_output=output
                )
            with open(path, "rb") as fh:
                data = fh.read()
            try:
                stem_clip = decode_audio(data, adapter.output_extension, mp3_command=mp3_command)
            except (CorruptFile, UnsupportedFormat) as exc:
                raise AdapterFailed(
                    f"stem {name!r} is not decodable audio: {exc}", process_output=output
                ) from exc
            if abs(stem_clip.duration - source.duration) > DURATION_TOLERANCE * source.duration:
                raise AdapterFailed(
                    f"stem {name!r} duration {stem_clip.duration:.2f}s deviates from "
                    f"source {source.duration:.2f}s by more than 1%",
                    process_output=output,
                )
            stems[name] = data
    return StemSet(stems=stems)
