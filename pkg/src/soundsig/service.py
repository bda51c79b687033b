"""Session orchestration: uploads, analysis runs, chat turns, tool dispatch.

This layer owns the store and the per-session locking contract; the HTTP
gateway and the CLI are both thin clients of it.
"""

from __future__ import annotations

import threading
import uuid

from .assistant import (
    DIGEST_MARKER,
    ChatMessage,
    ConversationThread,
    OfflineTemplateBackend,
    RemoteChatBackend,
    ToolKind,
    new_thread,
    run_analysis_turn,
    run_chat_turn,
)
from .audio_io import AudioClip, TrackMeta, decode_audio, parse_track_filename
from .chords import chord_table_csv, chord_table_json, recognize_chords
from .config import AppConfig
from .dsp import StftParams
from .errors import (
    AdapterFailed,
    AdapterNotConfigured,
    NoPitchDetected,
    NoTracks,
    SoundSigError,
    TooManyTracks,
    TrackNotFound,
    UploadTooLarge,
)
from .features import TrackFeatures, extract_all
from .midi import transcribe_to_midi, write_midi_file
from .stems import configure_stem_concurrency, separate_stems
from .store import SessionStore

MAX_TRACKS_PER_SESSION = 20
MAX_UPLOAD_BYTES = 50 * 1024 * 1024

UPLOAD_FORMAT_INSTRUCTION = (
    'Please upload your songs in the format "SongTitle_ArtistName.MP3" '
    '(for example "DancingintheMoonlight_KingHarvest.mp3").'
)

STEMS_UNAVAILABLE_MESSAGE = "stem separation unavailable"


class SessionService:
    def __init__(self, store: SessionStore, config: AppConfig | None = None):
        self.store = store
        self.config = config or AppConfig()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        configure_stem_concurrency(self.config.separation_max_concurrent)

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _stft_params(self) -> StftParams:
        return StftParams(window_size=self.config.window_size, hop_size=self.config.hop_size)

    def backend(self, api_key: str | None = None, kind: str | None = None):
        kind = kind or self.config.backend
        if kind == "offline":
            return OfflineTemplateBackend()
        if kind == "remote":
            return RemoteChatBackend(
                endpoint=self.config.endpoint,
                model=self.config.model,
                api_key=api_key or self.config.api_key(),
            )
        raise ValueError(f"unknown backend {kind!r}")

    # -- session lifecycle -------------------------------------------------

    def create_session(self) -> dict:
        record = self.store.create_session()
        record["thread"] = new_thread().to_dict()
        self.store.save_session(record)
        return record

    def upload_track(self, session_id: str, filename: str, data: bytes) -> dict:
        with self._lock(session_id):
            session = self.store.get_session(session_id)
            if len(session["tracks"]) >= MAX_TRACKS_PER_SESSION:
                raise TooManyTracks(
                    f"sessions accept at most {MAX_TRACKS_PER_SESSION} tracks"
                )
            if len(data) > MAX_UPLOAD_BYTES:
                raise UploadTooLarge(
                    f"upload is {len(data)} bytes; maximum is {MAX_UPLOAD_BYTES}"
                )
            meta = parse_track_filename(filename)
            decode_audio(data, filename, mp3_command=self.config.mp3_decoder)
            track = {
                "track_id": uuid.uuid4().hex,
                "title": meta.title,
                "artist": meta.artist,
                "original_filename": meta.original_filename,
                "blob_hash": self.store.put_blob(data),
                "status": "uploaded",
                "features": None,
                "spectrogram_artifact": None,
            }
            session["tracks"].append(track)
            self.store.save_session(session)
            return track

    def _decode_track(self, track: dict) -> AudioClip:
        data = self.store.get_blob(track["blob_hash"])
        return decode_audio(
            data, track["original_filename"], mp3_command=self.config.mp3_decoder
        )

    def run_analysis(self, session_id: str, api_key: str | None = None) -> dict:
        with self._lock(session_id):
            session = self.store.get_session(session_id)
            if not session["tracks"]:
                raise NoTracks("upload at least one track before analyzing")
            warnings = []
            analyzed: list[TrackFeatures] = []
            for track in session["tracks"]:
                try:
                    clip = self._decode_track(track)
                    features, png = extract_all(
                        clip,
                        meta=_track_meta(track),
                        params=self._stft_params(),
                        analysis_rate=self.config.analysis_rate,
                    )
                    artifact_id = self.store.put_artifact(
                        session_id, "spectrogram_png", "image/png", png, track["track_id"]
                    )
                    features.spectrogram_image_ref = artifact_id
                    track["features"] = features.to_dict()
                    track["spectrogram_artifact"] = artifact_id
                    track["status"] = "analyzed"
                    session["artifacts"].append(artifact_id)
                    analyzed.append(features)
                except SoundSigError as exc:
                    track["status"] = "error"
                    warnings.append(
                        {
                            "track_id": track["track_id"],
                            "code": exc.code,
                            "message": str(exc),
                        }
                    )
            session["warnings"] = warnings
            if not analyzed:
                session["report"] = None
                self.store.save_session(session)
                raise NoTracks("no uploaded track could be analyzed")
            # a re-run rebuilds the conversation so the report always matches
            # the current set of tracks
            thread = new_thread()
            thread.track_ids = [t["track_id"] for t in session["tracks"]]
            report = run_analysis_turn(thread, analyzed, self.backend(api_key))
            session["thread"] = thread.to_dict()
            session["report"] = report.to_dict()
            self.store.save_session(session)
            return {"report": session["report"], "warnings": warnings}

    def get_report(self, session_id: str) -> dict:
        session = self.store.get_session(session_id)
        if session["report"] is None:
            raise NoTracks("analysis has not been run for this session")
        return {"report": session["report"], "warnings": session["warnings"]}

    # -- chat and tools ----------------------------------------------------

    def post_message(
        self,
        session_id: str,
        text: str,
        selected_track: str | None = None,
        api_key: str | None = None,
    ) -> dict:
        with self._lock(session_id):
            session = self.store.get_session(session_id)
            thread = ConversationThread.from_dict(session["thread"])
            if thread.pending_tool is not None and selected_track is not None:
                result = self._run_tool(session, thread, selected_track)
                thread.pending_tool = None
                session["thread"] = thread.to_dict()
                self.store.save_session(session)
                return result
            message = run_chat_turn(thread, text, self.backend(api_key))
            session["thread"] = thread.to_dict()
            self.store.save_session(session)
            return {
                "type": "tool_prompt" if thread.pending_tool else "chat",
                "message": message.to_dict(),
                "pending_tool": thread.pending_tool.kind.value if thread.pending_tool else None,
            }

    def _find_track(self, session: dict, track_id: str) -> dict:
        for track in session["tracks"]:
            if track["track_id"] == track_id:
                return track
        raise TrackNotFound(f"no track {track_id} in this session")

    def _run_tool(self, session: dict, thread: ConversationThread, track_id: str) -> dict:
        kind = thread.pending_tool.kind
        track = self._find_track(session, track_id)
        name = f"{track['title']}_{track['artist']}"
        artifacts: list[dict] = []
        table = None
        try:
            if kind is ToolKind.CHORDS:
                segments = recognize_chords(self._decode_track(track), self._stft_params())
                csv_text = chord_table_csv(segments)
                artifact_id = self.store.put_artifact(
                    session["id"], "chord_table", "text/csv", csv_text.encode(), track_id
                )
                artifacts.append(_artifact_entry(artifact_id, "chord_table", "text/csv"))
                table = chord_table_json(segments)
                message = (
                    f"Chord analysis for {name}: {len(segments)} segment(s). "
                    "Columns: Start Time, End Time, Chord, Confidence."
                )
            elif kind is ToolKind.MIDI:
                events = transcribe_to_midi(self._decode_track(track))
                midi_bytes = write_midi_file(events)
                artifact_id = self.store.put_artifact(
                    session["id"], "midi_file", "audio/midi", midi_bytes, track_id
                )
                artifacts.append(_artifact_entry(artifact_id, "midi_file", "audio/midi"))
                message = f"MIDI transcription for {name}: {len(events)} note event(s)."
            else:
                data = self.store.get_blob(track["blob_hash"])
                stem_set = separate_stems(
                    data,
                    track["original_filename"],
                    self.config.separation_adapter(),
                    mp3_command=self.config.mp3_decoder,
                )
                for stem_name, stem_bytes in stem_set.stems.items():
                    artifact_id = self.store.put_artifact(
                        session["id"], "stem_audio", "audio/wav", stem_bytes, track_id
                    )
                    entry = _artifact_entry(artifact_id, "stem_audio", "audio/wav")
                    entry["stem"] = stem_name
                    artifacts.append(entry)
                message = f"Separated {name} into {len(artifacts)} stem(s): " + ", ".join(
                    sorted(stem_set.stems)
                )
        except AdapterNotConfigured:
            message = STEMS_UNAVAILABLE_MESSAGE
        except AdapterFailed as exc:
            message = f"stem separation failed: {exc}"
        except NoPitchDetected as exc:
            message = f"could not transcribe {name}: {exc}"
        session["artifacts"].extend(a["id"] for a in artifacts)
        tool_message = ChatMessage(
            role="tool", content=message, attachments=[a["id"] for a in artifacts]
        )
        thread.messages.append(tool_message)
        envelope = {
            "kind": kind.value,
            "track_id": track_id,
            "message": message,
            "artifacts": artifacts,
        }
        if table is not None:
            envelope["table"] = table
        return {"type": "tool_result", "message": tool_message.to_dict(), "envelope": envelope}

    # -- reads -------------------------------------------------------------

    def get_session_state(self, session_id: str) -> dict:
        session = self.store.get_session(session_id)
        thread = ConversationThread.from_dict(session["thread"])
        visible = [
            m.to_dict()
            for m in thread.messages
            if m.role in ("user", "assistant", "tool")
            and not m.content.startswith(DIGEST_MARKER)
        ]
        return {
            "session_id": session["id"],
            "tracks": [
                {
                    "track_id": t["track_id"],
                    "title": t["title"],
                    "artist": t["artist"],
                    "status": t["status"],
                    "spectrogram_artifact": t["spectrogram_artifact"],
                }
                for t in session["tracks"]
            ],
            "analyzed": session["report"] is not None,
            "report": session["report"],
            "warnings": session["warnings"],
            "pending_tool": thread.pending_tool.kind.value if thread.pending_tool else None,
            "messages": visible,
            "artifacts": session["artifacts"],
        }

    def get_artifact(self, artifact_id: str) -> tuple[bytes, str, str]:
        return self.store.get_artifact(artifact_id)


def _track_meta(track: dict) -> TrackMeta:
    return TrackMeta(
        title=track["title"],
        artist=track["artist"],
        original_filename=track["original_filename"],
    )


def _artifact_entry(artifact_id: str, kind: str, media_type: str) -> dict:
    return {"id": artifact_id, "kind": kind, "media_type": media_type}
