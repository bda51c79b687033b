"""Service configuration from an INI-style key-value file.

All keys are optional; defaults suit offline use. Example:

    [audio]
    analysis_rate = 22050
    mp3_decoder = ffmpeg -y -i {input} {output}

    [stft]
    window_size = 2048
    hop_size = 512

    [separation]
    command = demucs-wrapper {input} {output_dir}
    stems = vocals,drums,bass,other
    max_concurrent = 2

    [assistant]
    backend = offline
    endpoint = https://api.openai.com/v1/chat/completions
    model = gpt-4o

    [storage]
    path = soundsig-data.sqlite3
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .audio_io import ANALYSIS_RATE
from .dsp import DEFAULT_HOP_SIZE, DEFAULT_WINDOW_SIZE
from .stems import DEFAULT_STEM_NAMES, SeparationAdapter

API_KEY_ENV_VAR = "SOUNDSIG_API_KEY"

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4o"
DEFAULT_STORE_PATH = "soundsig-data.sqlite3"


@dataclass
class AppConfig:
    analysis_rate: int = ANALYSIS_RATE
    mp3_decoder: str | None = None
    window_size: int = DEFAULT_WINDOW_SIZE
    hop_size: int = DEFAULT_HOP_SIZE
    separation_command: str | None = None
    stem_names: tuple = DEFAULT_STEM_NAMES
    separation_max_concurrent: int = 2
    backend: str = "offline"
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    store_path: str = DEFAULT_STORE_PATH

    def api_key(self) -> str | None:
        return os.environ.get(API_KEY_ENV_VAR)

    def separation_adapter(self) -> SeparationAdapter | None:
        if not self.separation_command:
            return None
        return SeparationAdapter(
            command_template=self.separation_command,
            stem_names=tuple(self.stem_names),
        )


def load_config(path: str | None = None) -> AppConfig:
    cfg = AppConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if parser.has_section("audio"):
        cfg.analysis_rate = parser.getint("audio", "analysis_rate", fallback=cfg.analysis_rate)
        cfg.mp3_decoder = parser.get("audio", "mp3_decoder", fallback=cfg.mp3_decoder)
    if parser.has_section("stft"):
        cfg.window_size = parser.getint("stft", "window_size", fallback=cfg.window_size)
        cfg.hop_size = parser.getint("stft", "hop_size", fallback=cfg.hop_size)
    if parser.has_section("separation"):
        cfg.separation_command = parser.get("separation", "command", fallback=None)
        stems = parser.get("separation", "stems", fallback=None)
        if stems:
            cfg.stem_names = tuple(s.strip() for s in stems.split(",") if s.strip())
        cfg.separation_max_concurrent = parser.getint(
            "separation", "max_concurrent", fallback=cfg.separation_max_concurrent
        )
    if parser.has_section("assistant"):
        cfg.backend = parser.get("assistant", "backend", fallback=cfg.backend)
        cfg.endpoint = parser.get("assistant", "endpoint", fallback=cfg.endpoint)
        cfg.model = parser.get("assistant", "model", fallback=cfg.model)
    if parser.has_section("storage"):
        cfg.store_path = parser.get("storage", "path", fallback=cfg.store_path)
    return cfg
