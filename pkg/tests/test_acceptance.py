"""Acceptance suite: one test per release criterion, at the stated tolerance.

Every test prints a single `ACCEPTANCE <name>: PASS` line on success (run with
-s or check captured output); any failure fails the module.
"""

import csv
import io
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from soundsig.assistant import (
    REPORT_HEADINGS,
    OfflineTemplateBackend,
    detect_tool_keyword,
    new_thread,
    run_analysis_turn,
)
from soundsig.audio_io import TrackMeta
from soundsig.chords import recognize_chords
from soundsig.config import AppConfig
from soundsig.dsp import PITCH_CLASSES, StftParams, brute_force_dft, chroma, hann_window, stft_magnitude
from soundsig.features import (
    correlate_key_profiles,
    estimate_key,
    estimate_tempo,
    extract_all,
    loudness,
    onset_strength,
    rms_energy,
    spectral_centroid_mean,
    spectral_flux_mean,
)
from soundsig.gateway import create_app
from soundsig.midi import transcribe_to_midi, write_midi_file

from conftest import (
    SR,
    click_track,
    clip,
    faded,
    melody,
    pitch_freq,
    scale_clip,
    sine,
    stationary_tone,
    triad,
    wav_bytes,
)
from smf_parser import parse_smf
from test_assistant import make_features
from test_gateway import make_track_bytes


def _announce(name, started):
    print(f"ACCEPTANCE {name}: PASS ({time.monotonic() - started:.1f}s)")


def test_dsp_oracle_equivalence(rng):
    started = time.monotonic()
    cases = [StftParams(256, 128)] * 60 + [StftParams(512, 256)] * 30 + [StftParams(2048, 512)] * 10
    for params in cases:
        window = hann_window(params.window_size)
        half = params.window_size // 2
        n = int(rng.integers(params.window_size, 4097))
        x = rng.standard_normal(n) * 0.5
        spec = stft_magnitude(clip(x), params)
        padded = np.pad(x, half, mode="reflect")
        for t in range(spec.n_frames):
            frame = padded[t * params.hop_size : t * params.hop_size + params.window_size]
            expected = brute_force_dft(frame * window)
            scale = max(expected.max(), 1e-12)
            assert np.max(np.abs(spec.magnitudes[t] - expected)) <= 1e-6 * scale
    elapsed = time.monotonic() - started
    assert elapsed < 30.0
    _announce("dsp-oracle-equivalence", started)


def test_feature_golden_suite():
    started = time.monotonic()
    assert rms_energy(clip(sine(440.0, 1.0, amp=1.0))) == pytest.approx(0.7071, abs=1e-3)
    centroid = spectral_centroid_mean(stft_magnitude(clip(sine(440.0, 2.0))))
    assert abs(centroid - 440.0) <= 11.0
    assert spectral_flux_mean(stft_magnitude(clip(stationary_tone()))) <= 1e-6
    silence = clip(np.zeros(3 * SR))
    silence_spec = stft_magnitude(silence)
    assert rms_energy(silence) == 0.0
    assert loudness(silence, spec=silence_spec) == 0.0
    assert spectral_flux_mean(silence_spec) == 0.0
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    _announce("feature-golden-suite", started)


def test_tempo_suite():
    started = time.monotonic()
    for bpm in (60, 90, 120, 150, 180):
        spec = stft_magnitude(clip(click_track(float(bpm), 10.0)))
        est = estimate_tempo(onset_strength(spec), spec.hop_seconds)
        on_target = abs(est.bpm - bpm) <= 2.0
        on_octave = (
            abs(est.bpm - bpm / 2.0) <= 2.0 or abs(est.bpm - bpm * 2.0) <= 2.0
        ) and est.octave_ambiguous
        assert on_target or on_octave, (bpm, est.bpm, est.octave_ambiguous)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _announce("tempo-suite", started)


def test_key_suite():
    started = time.monotonic()
    for mode in ("major", "minor"):
        for pc in range(12):
            h = estimate_key(chroma(stft_magnitude(clip(scale_clip(pc, mode)))))
            assert (h.key, h.mode) == (PITCH_CLASSES[pc], mode)
            assert h.key_strength >= 0.7
    mean = chroma(stft_magnitude(clip(scale_clip(0, "major")))).energies.mean(axis=0)
    base_key, base_mode, base_strength = correlate_key_profiles(mean)
    for shift in range(12):
        key, mode, strength = correlate_key_profiles(np.roll(mean, shift))
        expected = PITCH_CLASSES[(PITCH_CLASSES.index(base_key) + shift) % 12]
        assert (key, mode) == (expected, base_mode)
        assert abs(strength - base_strength) <= 1e-6
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _announce("key-suite", started)


def test_chord_suite():
    started = time.monotonic()
    for quality in ("maj", "min"):
        for root in range(12):
            segments = recognize_chords(clip(triad(root, quality, 2.0)))
            assert {s.chord for s in segments} == {f"{PITCH_CLASSES[root]}:{quality}"}
    progressions = [
        [(0, "maj"), (5, "maj"), (7, "maj")],
        [(9, "min"), (2, "min"), (4, "maj")],
        [(4, "maj"), (11, "min"), (6, "min")],
    ]
    for chords in progressions:
        x = np.concatenate([triad(pc, quality, 2.0) for pc, quality in chords])
        segments = recognize_chords(clip(x))
        labels = [s.chord for s in segments if s.chord != "N"]
        assert labels == [f"{PITCH_CLASSES[pc]}:{quality}" for pc, quality in chords]
        for i, seg in enumerate(s for s in segments if s.chord != "N"):
            assert abs(seg.start_time - 2.0 * i) <= 0.2
            assert abs(seg.end_time - 2.0 * (i + 1)) <= 0.2
        duration = len(x) / SR
        assert segments[0].start_time == 0.0
        assert segments[-1].end_time == pytest.approx(duration, abs=1e-9)
        for a, b in zip(segments, segments[1:]):
            assert a.end_time == pytest.approx(b.start_time, abs=1e-9)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _announce("chord-suite", started)


def test_midi_round_trip(rng):
    started = time.monotonic()
    tick_seconds = 0.5 / 480
    for _ in range(5):
        notes = [
            (int(rng.integers(36, 85)), 0.15 + 0.25 * float(rng.random()))
            for _ in range(10)
        ]
        events = transcribe_to_midi(clip(melody(notes)))
        assert [e.note_number for e in events] == [n for n, _ in notes]
        blob = write_midi_file(events)
        parsed = parse_smf(blob)  # independent parser
        assert blob.startswith(b"MThd")
        assert len(parsed["notes"]) == len(events)
        expected_onset = 0.0
        for (onset, _, note, _), (src_note, src_dur) in zip(parsed["notes"], notes):
            assert note == src_note
            assert abs(onset - expected_onset) <= 0.05 + tick_seconds
            expected_onset += src_dur
    elapsed = time.monotonic() - started
    assert elapsed < 30.0
    _announce("midi-round-trip", started)


def test_report_contract():
    started = time.monotonic()
    tracks = [make_features(), make_features(title="Other", bpm=92.3)]
    outputs = []
    for _ in range(3):
        thread = new_thread()
        report = run_analysis_turn(thread, tracks, OfflineTemplateBackend())
        assert [s.heading for s in report.sections()] == REPORT_HEADINGS
        assert report.disclaimer.heading == "Disclaimer"
        outputs.append(thread.messages[-1].content.encode())
    assert outputs[0] == outputs[1] == outputs[2]
    _announce("report-contract", started)


ADVERSARIAL_MESSAGES = [
    "tell me about the tempo",
    "I took a midicourse last year",
    "nice stemware collection",
    "the chordata phylum is fascinating",
    "my stemless wine glass broke",
    "premidterm jitters",
    "harpsichord music is great",
    "clavichord or harpsichord?",
    "what key is this in?",
    "brightness and fullness please",
    "is this song energetic?",
    "systemic patterns in my taste",
    "acid jazz recommendations",
    "which era is this from?",
    "the word misdemeanor has mid in it",
    "steamship songs from the 1900s",
    "what instruments do you hear?",
    "compare the first two songs",
    "any recommendations based on these?",
    "explain spectral flux like I am five",
]


def test_keyword_router():
    started = time.monotonic()
    from soundsig.assistant import ToolKind

    assert detect_tool_keyword("can you give me the stems of this song?") is ToolKind.STEMS
    assert detect_tool_keyword("create a midi file from this song.") is ToolKind.MIDI
    assert detect_tool_keyword("what are the chords in this song?") is ToolKind.CHORDS
    assert len(ADVERSARIAL_MESSAGES) == 20
    for message in ADVERSARIAL_MESSAGES:
        assert detect_tool_keyword(message) is None, message
    _announce("keyword-router", started)


def test_end_to_end_offline_flow(tmp_path):
    started = time.monotonic()
    config = AppConfig(store_path=str(tmp_path / "acceptance.sqlite3"))

    with TestClient(create_app(config)) as client:
        sid = client.post("/sessions").json()["session_id"]
        for name, seed in (("First_One.wav", 0), ("Second_Two.wav", 7)):
            resp = client.post(
                f"/sessions/{sid}/tracks",
                files={"file": (name, make_track_bytes(seed), "audio/wav")},
                data={"filename": name},
            )
            assert resp.status_code == 201
        analysis = client.post(f"/sessions/{sid}/analyze")
        assert analysis.status_code == 200
        report = analysis.json()["report"]
        assert [s["heading"] for s in report["sections"]] == REPORT_HEADINGS

        follow_up = client.post(
            f"/sessions/{sid}/messages",
            json={"text": "What do these song choices say about me as a person?"},
        )
        assert follow_up.json()["type"] == "chat"

        prompt = client.post(
            f"/sessions/{sid}/messages",
            json={"text": "what are the chords in this song?"},
        )
        assert prompt.json()["type"] == "tool_prompt"
        track_id = client.get(f"/sessions/{sid}").json()["tracks"][0]["track_id"]
        result = client.post(
            f"/sessions/{sid}/messages", json={"text": "", "selected_track": track_id}
        ).json()
        assert result["type"] == "tool_result"
        art_id = result["envelope"]["artifacts"][0]["id"]
        csv_text = client.get(f"/artifacts/{art_id}").text
        header = next(csv.reader(io.StringIO(csv_text)))
        assert header == ["Start Time", "End Time", "Chord", "Confidence"]
        artifact_ids = [art_id, client.get(f"/sessions/{sid}").json()["tracks"][0]["spectrogram_artifact"]]
        artifact_bytes = {a: client.get(f"/artifacts/{a}").content for a in artifact_ids}

    # service restart: a new app instance over the same store
    with TestClient(create_app(config)) as reborn:
        assert reborn.get(f"/sessions/{sid}/report").json()["report"] == report
        for art, data in artifact_bytes.items():
            assert reborn.get(f"/artifacts/{art}").content == data

    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    _announce("end-to-end-offline-flow", started)


def _random_mixture(rng):
    bpm = float(rng.uniform(50.0, 190.0))
    seconds = 4.0
    x = click_track(bpm, seconds, amp=float(rng.uniform(0.4, 0.8)))
    for _ in range(int(rng.integers(1, 4))):
        freq = pitch_freq(int(rng.integers(12)), octave=int(rng.integers(3, 6)))
        x = x + faded(sine(freq, seconds, amp=float(rng.uniform(0.05, 0.2))))
    x = x + rng.standard_normal(len(x)) * 0.01
    return np.clip(x, -1.0, 1.0)


def test_amplitude_invariance_suite(rng):
    started = time.monotonic()
    meta = TrackMeta(title="Song", artist="Artist", original_filename="Song_Artist.wav")
    for i in range(50):
        x = _random_mixture(rng)
        full, _ = extract_all(clip(x), meta)
        half, _ = extract_all(clip(0.5 * x), meta)
        assert half.timbre.spectral_centroid_mean == pytest.approx(
            full.timbre.spectral_centroid_mean, rel=1e-9
        )
        assert half.timbre.spectral_bandwidth_mean == pytest.approx(
            full.timbre.spectral_bandwidth_mean, rel=1e-9
        )
        if full.harmony is None:
            assert half.harmony is None
        else:
            assert (half.harmony.key, half.harmony.mode) == (
                full.harmony.key,
                full.harmony.mode,
            )
        if full.tempo_rhythm is None:
            assert half.tempo_rhythm is None
        else:
            assert half.tempo_rhythm.bpm == pytest.approx(
                full.tempo_rhythm.bpm, rel=1e-9
            )
        assert half.energy.rms_energy == pytest.approx(
            0.5 * full.energy.rms_energy, rel=1e-12
        )
        assert half.energy.loudness == pytest.approx(
            0.25**0.67 * full.energy.loudness, rel=1e-6
        )
    _announce("amplitude-invariance-suite", started)
