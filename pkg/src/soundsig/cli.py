"""Command-line client: offline analysis to JSON, or serving the HTTP gateway."""

from __future__ import annotations

import json
import os
import sys

import click

from .assistant import (
    OfflineTemplateBackend,
    RemoteChatBackend,
    new_thread,
    run_analysis_turn,
)
from .audio_io import decode_audio, parse_track_filename
from .config import load_config
from .dsp import StftParams
from .errors import SoundSigError
from .features import extract_all


@click.group()
def main():
    """Audio analysis: feature extraction, preference reports, musician tools."""


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path())
@click.option("--output", "-o", type=click.Path(), default=None, help="Write the result JSON here (default: stdout).")
@click.option("--spectrograms", type=click.Path(), default=None, help="Directory for per-track spectrogram PNGs.")
@click.option("--backend", type=click.Choice(["offline", "remote"]), default="offline")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def analyze(paths, output, spectrograms, backend, config_path):
    """Analyze audio files named SongTitle_ArtistName.<ext> and emit JSON."""
    cfg = load_config(config_path)
    params = StftParams(window_size=cfg.window_size, hop_size=cfg.hop_size)
    tracks = []
    images = []
    failed = False
    for path in paths:
        try:
            if not os.path.isfile(path):
                raise FileNotFoundError(f"no such file: {path}")
            meta = parse_track_filename(os.path.basename(path))
            with open(path, "rb") as fh:
                data = fh.read()
            clip = decode_audio(data, path, mp3_command=cfg.mp3_decoder)
            features, png = extract_all(
                clip, meta, params=params, analysis_rate=cfg.analysis_rate
            )
            tracks.append(features)
            images.append((meta, png))
        except (SoundSigError, OSError) as exc:
            click.echo(f"error: {path}: {exc}", err=True)
            failed = True
    if failed:
        sys.exit(2)

    if spectrograms:
        os.makedirs(spectrograms, exist_ok=True)
        for meta, png in images:
            out_path = os.path.join(spectrograms, f"{meta.display_name}.png")
            with open(out_path, "wb") as fh:
                fh.write(png)

    if backend == "offline":
        assistant_backend = OfflineTemplateBackend()
    else:
        assistant_backend = RemoteChatBackend(
            endpoint=cfg.endpoint, model=cfg.model, api_key=cfg.api_key()
        )
    thread = new_thread()
    report = run_analysis_turn(thread, tracks, assistant_backend)
    document = {
        "tracks": [t.to_dict() for t in tracks],
        "report": report.to_dict(),
    }
    text = json.dumps(document, indent=2, sort_keys=True)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--static-dir", type=click.Path(), default=None, help="Directory with the built browser UI.")
def serve(host, port, config_path, static_dir):
    """Run the HTTP gateway."""
    import uvicorn

    from .gateway import create_app

    app = create_app(load_config(config_path), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
