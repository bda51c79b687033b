"""Exception hierarchy shared by all analysis and service modules."""


class SoundSigError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class MalformedFilename(SoundSigError):
    code = "malformed_filename"


class UnsupportedFormat(SoundSigError):
    code = "unsupported_format"


class CorruptFile(SoundSigError):
    code = "corrupt_file"


class UploadTooLarge(SoundSigError):
    code = "upload_too_large"


class ClipTooShort(SoundSigError):
    code = "clip_too_short"


class NoBeatDetected(SoundSigError):
    code = "no_beat_detected"


class KeyUndefined(SoundSigError):
    code = "key_undefined"


class NoPitchDetected(SoundSigError):
    code = "no_pitch_detected"


class AdapterNotConfigured(SoundSigError):
    code = "adapter_not_configured"


class AdapterFailed(SoundSigError):
    code = "adapter_failed"

    def __init__(self, message, process_output=""):
        super().__init__(message)
        self.process_output = process_output


class BackendUnavailable(SoundSigError):
    code = "backend_unavailable"


class MalformedReport(SoundSigError):
    code = "malformed_report"

    def __init__(self, message, raw_response=""):
        super().__init__(message)
        self.raw_response = raw_response


class NoTracks(SoundSigError):
    code = "no_tracks"


class TooManyTracks(SoundSigError):
    code = "too_many_tracks"


class TrackNotFound(SoundSigError):
    code = "track_not_found"


class NotFound(SoundSigError):
    code = "not_found"


class StorageUnavailable(SoundSigError):
    code = "storage_unavailable"
