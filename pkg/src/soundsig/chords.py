"""Chord recognition over chroma frames with major/minor triad templates.

Output rows carry exactly the four table columns "Start Time", "End Time",
"Chord", and "Confidence". Labels are "C:maj" / "A:min" style, "N" for
no-chord.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .audio_io import ANALYSIS_RATE, AudioClip, resample_to_analysis_rate
from .dsp import PITCH_CLASSES, StftParams, chroma, stft_magnitude
from .errors import ClipTooShort

CHORD_TABLE_COLUMNS = ("Start Time", "End Time", "Chord", "Confidence")

MIN_SEGMENT_SECONDS = 0.25

# Frames whose chroma energy falls below this fraction of the clip's median
# frame energy are treated as no-chord.
NO_CHORD_ENERGY_FRACTION = 0.01

NO_CHORD_LABEL = "N"

MAJOR_INTERVALS = (0, 4, 7)
MINOR_INTERVALS = (0, 3, 7)


@dataclass
class ChordSegment:
    start_time: float
    end_time: float
    chord: str
    confidence: float

    def to_row(self) -> dict:
        return {
            "Start Time": round(self.start_time, 3),
            "End Time": round(self.end_time, 3),
            "Chord": self.chord,
            "Confidence": round(self.confidence, 3),
        }


def _triad_templates() -> tuple[list[str], np.ndarray]:
    labels = []
    rows = []
    for root in range(12):
        for quality, intervals in (("maj", MAJOR_INTERVALS), ("min", MINOR_INTERVALS)):
            vec = np.zeros(12)
            for step in intervals:
                vec[(root + step) % 12] = 1.0
            labels.append(f"{PITCH_CLASSES[root]}:{quality}")
            rows.append(vec / np.linalg.norm(vec))
    return labels, np.array(rows)


_TEMPLATE_LABELS, _TEMPLATES = _triad_templates()
_LABEL_INDEX = {label: i for i, label in enumerate(_TEMPLATE_LABELS)}


def _frame_scores(energies: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Per-frame best label and the cosine score matrix [n_frames, 24]."""
    frame_energy = energies.sum(axis=1)
    nonzero = frame_energy[frame_energy > 0.0]
    threshold = NO_CHORD_ENERGY_FRACTION * (np.median(nonzero) if nonzero.size else 0.0)

    norms = np.linalg.norm(energies, axis=1)
    unit = np.divide(
        energies, norms[:, None], out=np.zeros_like(energies), where=norms[:, None] > 0.0
    )
    scores = unit @ _TEMPLATES.T  # cosine similarity against unit templates
    labels = []
    for t in range(len(energies)):
        if frame_energy[t] <= threshold:
            labels.append(NO_CHORD_LABEL)
        else:
            labels.append(_TEMPLATE_LABELS[int(np.argmax(scores[t]))])
    return labels, scores


def _merge_runs(labels: list[str]) -> list[list]:
    runs = []
    for t, label in enumerate(labels):
        if runs and runs[-1][0] == label:
            runs[-1][2] = t + 1
        else:
            runs.append([label, t, t + 1])
    return runs


def _absorb_short_runs(runs: list[list], min_frames: int) -> list[list]:
    runs = [list(r) for r in runs]
    while len(runs) > 1:
        lengths = [r[2] - r[1] for r in runs]
        shortest = int(np.argmin(lengths))
        if lengths[shortest] >= min_frames:
            break
        prev_len = lengths[shortest - 1] if shortest > 0 else -1
        next_len = lengths[shortest + 1] if shortest < len(runs) - 1 else -1
        target = shortest - 1 if prev_len >= next_len else shortest + 1
        lo = min(runs[shortest][1], runs[target][1])
        hi = max(runs[shortest][2], runs[target][2])
        runs[target] = [runs[target][0], lo, hi]
        del runs[shortest]
        # re-merge neighbors that now share a label
        merged = []
        for r in runs:
            if merged and merged[-1][0] == r[0]:
                merged[-1][2] = r[2]
            else:
                merged.append(r)
        runs = merged
    return runs


def _segment_confidence(label: str, scores: np.ndarray, energies: np.ndarray) -> float:
    """Mean correlation of the segment's label template over its frames."""
    if label == NO_CHORD_LABEL:
        best = scores.max(axis=1)
        silent = energies.sum(axis=1) == 0.0
        per_frame = np.where(silent, 1.0, 1.0 - best)
    else:
        per_frame = scores[:, _LABEL_INDEX[label]]
    return float(np.clip(np.mean(per_frame), 0.0, 1.0))


def recognize_chords(clip: AudioClip, params: StftParams | None = None) -> list[ChordSegment]:
    """Template-match chroma frames and merge them into timed chord segments.

    Segments tile [0, duration] exactly; runs shorter than MIN_SEGMENT_SECONDS
    are absorbed into their longer neighbor.
    """
    if clip.duration < 1.0:
        raise ClipTooShort("chord recognition needs at least 1 s of audio")
    clip = resample_to_analysis_rate(clip, ANALYSIS_RATE)
    params = params or StftParams()
    spec = stft_magnitude(clip, params)
    energies = chroma(spec).energies
    labels, scores = _frame_scores(energies)

    hop_s = spec.hop_seconds
    min_frames = max(1, int(round(MIN_SEGMENT_SECONDS / hop_s)))
    runs = _absorb_short_runs(_merge_runs(labels), min_frames)

    duration = clip.duration
    segments = []
    for label, lo, hi in runs:
        start = 0.0 if lo == 0 else lo * hop_s
        end = duration if hi >= spec.n_frames else hi * hop_s
        segments.append(
            ChordSegment(
                start_time=start,
                end_time=end,
                chord=label,
                confidence=_segment_confidence(label, scores[lo:hi], energies[lo:hi]),
            )
        )
    return segments


def chord_table_csv(segments: list[ChordSegment]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CHORD_TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for seg in segments:
        writer.writerow(seg.to_row())
    return buf.getvalue()


def chord_table_json(segments: list[ChordSegment]) -> list[dict]:
    return [seg.to_row() for seg in segments]
