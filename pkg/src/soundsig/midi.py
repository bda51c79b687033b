"""Monophonic audio-to-MIDI transcription and Standard MIDI File writing.

Transcription: per-frame fundamental estimation by time-domain autocorrelation
(46 ms frames), nearest-semitone quantization, merge-and-prune into note
events. Output files are SMF format 0, 480 ticks per quarter at 120 BPM.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .audio_io import ANALYSIS_RATE, AudioClip, resample_to_analysis_rate
from .errors import ClipTooShort, NoPitchDetected

FRAME_SIZE = 1024  # ~46 ms at 22050 Hz
FRAME_HOP = 512

PITCH_FMIN = 65.41  # C2
PITCH_FMAX = 1046.50  # C6

VOICING_THRESHOLD = 0.5  # normalized autocorrelation peak required for a voiced frame
MIN_NOTE_SECONDS = 0.08
FIXED_VELOCITY = 80

TICKS_PER_QUARTER = 480
TEMPO_MICROSECONDS = 500_000  # 120 BPM
_TICKS_PER_SECOND = TICKS_PER_QUARTER * 1_000_000 / TEMPO_MICROSECONDS


@dataclass
class MidiNoteEvent:
    note_number: int
    onset: float
    duration: float
    velocity: int = FIXED_VELOCITY

    def __post_init__(self):
        if not 0 <= self.note_number <= 127:
            raise ValueError("note_number must be 0..127")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 1 <= self.velocity <= 127:
            raise ValueError("velocity must be 1..127")


def _frame_pitch(frame: np.ndarray, sample_rate: int) -> float | None:
    """Fundamental frequency of one frame, or None when unvoiced."""
    frame = frame - frame.mean()
    r = np.correlate(frame, frame, mode="full")[len(frame) - 1 :]
    if r[0] <= 0.0:
        return None
    r_norm = r / r[0]
    lag_min = max(2, int(np.floor(sample_rate / PITCH_FMAX)))
    lag_max = min(len(r_norm) - 2, int(np.ceil(sample_rate / PITCH_FMIN)))
    if lag_min >= lag_max:
        return None
    window = r_norm[lag_min : lag_max + 1]
    # local maxima only; plateaus count via >= on the left
    peaks = np.flatnonzero(
        (window[1:-1] >= window[:-2]) & (window[1:-1] > window[2:])
    ) + lag_min + 1
    if peaks.size == 0:
        return None
    peak_vals = r_norm[peaks]
    best_val = peak_vals.max()
    if best_val < VOICING_THRESHOLD:
        return None
    # smallest lag close to the global peak guards against subharmonics
    candidates = peaks[peak_vals >= 0.9 * best_val]
    lag = int(candidates.min())
    a, b, c = r_norm[lag - 1], r_norm[lag], r_norm[lag + 1]
    denom = a - 2 * b + c
    if denom != 0:
        lag = lag + float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
    return sample_rate / lag


def _freq_to_midi(freq: float) -> int:
    return int(round(69 + 12 * np.log2(freq / 440.0)))


def transcribe_to_midi(clip: AudioClip) -> list[MidiNoteEvent]:
    """Transcribe monophonic material into note events.

    Consecutive frames with the same note merge into one event; events shorter
    than MIN_NOTE_SECONDS are dropped. Velocity is fixed.
    """
    if clip.duration < 0.5:
        raise ClipTooShort("transcription needs at least 0.5 s of audio")
    clip = resample_to_analysis_rate(clip, ANALYSIS_RATE)
    x = clip.samples
    sr = clip.sample_rate
    hop_s = FRAME_HOP / sr

    notes_per_frame: list[int | None] = []
    for start in range(0, len(x) - FRAME_SIZE + 1, FRAME_HOP):
        freq = _frame_pitch(x[start : start + FRAME_SIZE], sr)
        if freq is None:
            notes_per_frame.append(None)
        else:
            note = _freq_to_midi(freq)
            notes_per_frame.append(note if 0 <= note <= 127 else None)

    if not any(n is not None for n in notes_per_frame):
        raise NoPitchDetected("no voiced frames found")

    events = []
    run_note, run_start = None, 0
    for t, note in enumerate(notes_per_frame + [None]):
        if note == run_note:
            continue
        if run_note is not None:
            duration = (t - run_start) * hop_s
            if duration >= MIN_NOTE_SECONDS:
                events.append(
                    MidiNoteEvent(
                        note_number=run_note,
                        onset=run_start * hop_s,
                        duration=duration,
                    )
                )
        run_note, run_start = note, t
    if not events:
        raise NoPitchDetected("no note lasted long enough to keep")
    return events


def _vlq(value: int) -> bytes:
    """Variable-length quantity encoding."""
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_midi_file(events: list[MidiNoteEvent]) -> bytes:
    """Serialize note events as a single-track Standard MIDI File."""
    timed = []  # (tick, order, message) with note-offs before note-ons at a tick
    for ev in events:
        on_tick = round(ev.onset * _TICKS_PER_SECOND)
        off_tick = max(on_tick + 1, round((ev.onset + ev.duration) * _TICKS_PER_SECOND))
        timed.append((on_tick, 1, bytes([0x90, ev.note_number, ev.velocity])))
        timed.append((off_tick, 0, bytes([0x80, ev.note_number, 0x40])))
    timed.sort(key=lambda item: (item[0], item[1]))

    track = bytearray()
    track += _vlq(0) + bytes([0xFF, 0x51, 0x03]) + struct.pack(">I", TEMPO_MICROSECONDS)[1:]
    cursor = 0
    for tick, _, message in timed:
        track += _vlq(tick - cursor) + message
        cursor = tick
    track += _vlq(0) + bytes([0xFF, 0x2F, 0x00])

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, TICKS_PER_QUARTER)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)
