"""soundsig: audio feature extraction, preference reports, and musician tools."""

from .audio_io import AudioClip, TrackMeta, decode_audio, parse_track_filename
from .features import TrackFeatures, extract_all

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "TrackMeta",
    "TrackFeatures",
    "decode_audio",
    "extract_all",
    "parse_track_filename",
    "__version__",
]
