"""Single-file embedded persistence: SQLite holding JSON session records and
content-addressed artifact blobs.

Layout:
    sessions(id, created_at, record)     record = the session as JSON
    blobs(hash, data)                    hash = sha256 of the bytes
    artifacts(id, session_id, kind, media_type, blob_hash, source_track)

Blobs are deduplicated by hash; artifact rows point into them, so re-reading
an artifact id always yields identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import time
import uuid

from .errors import NotFound, StorageUnavailable

_SCHEMA = """
CREATE TABLE IF NOT EXISTS sessions (
    id TEXT PRIMARY KEY,
    created_at REAL NOT NULL,
    record TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS blobs (
    hash TEXT PRIMARY KEY,
    data BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS artifacts (
    id TEXT PRIMARY KEY,
    session_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    media_type TEXT NOT NULL,
    blob_hash TEXT NOT NULL REFERENCES blobs(hash),
    source_track TEXT
);
"""


class SessionStore:
    def __init__(self, path: str):
        self.path = path
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        try:
            conn = sqlite3.connect(self.path, timeout=30.0)
            conn.execute("PRAGMA foreign_keys = ON")
            return conn
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"cannot open store at {self.path}: {exc}") from exc

    def create_session(self) -> dict:
        record = {
            "id": uuid.uuid4().hex,
            "created_at": time.time(),
            "tracks": [],
            "thread": None,
            "report": None,
            "warnings": [],
            "artifacts": [],
        }
        try:
            with self._connect() as conn:
                conn.execute(
                    "INSERT INTO sessions (id, created_at, record) VALUES (?, ?, ?)",
                    (record["id"], record["created_at"], json.dumps(record)),
                )
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to create session: {exc}") from exc
        return record

    def get_session(self, session_id: str) -> dict:
        try:
            with self._connect() as conn:
                row = conn.execute(
                    "SELECT record FROM sessions WHERE id = ?", (session_id,)
                ).fetchone()
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to read session: {exc}") from exc
        if row is None:
            raise NotFound(f"no session {session_id}")
        return json.loads(row[0])

    def save_session(self, record: dict) -> None:
        try:
            with self._connect() as conn:
                updated = conn.execute(
                    "UPDATE sessions SET record = ? WHERE id = ?",
                    (json.dumps(record), record["id"]),
                ).rowcount
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to save session: {exc}") from exc
        if updated == 0:
            raise NotFound(f"no session {record['id']}")

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        try:
            with self._connect() as conn:
                conn.execute(
                    "INSERT OR IGNORE INTO blobs (hash, data) VALUES (?, ?)",
                    (digest, data),
                )
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to store blob: {exc}") from exc
        return digest

    def get_blob(self, blob_hash: str) -> bytes:
        try:
            with self._connect() as conn:
                row = conn.execute(
                    "SELECT data FROM blobs WHERE hash = ?", (blob_hash,)
                ).fetchone()
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to read blob: {exc}") from exc
        if row is None:
            raise NotFound(f"no blob {blob_hash}")
        return row[0]

    def put_artifact(
        self,
        session_id: str,
        kind: str,
        media_type: str,
        data: bytes,
        source_track: str | None = None,
    ) -> str:
        blob_hash = self.put_blob(data)
        artifact_id = uuid.uuid4().hex
        try:
            with self._connect() as conn:
                conn.execute(
                    "INSERT INTO artifacts (id, session_id, kind, media_type, blob_hash, source_track)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (artifact_id, session_id, kind, media_type, blob_hash, source_track),
                )
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to store artifact: {exc}") from exc
        return artifact_id

    def get_artifact(self, artifact_id: str) -> tuple[bytes, str, str]:
        """Returns (bytes, media_type, kind)."""
        try:
            with self._connect() as conn:
                row = conn.execute(
                    "SELECT b.data, a.media_type, a.kind FROM artifacts a"
                    " JOIN blobs b ON b.hash = a.blob_hash WHERE a.id = ?",
                    (artifact_id,),
                ).fetchone()
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"failed to read artifact: {exc}") from exc
        if row is None:
            raise NotFound(f"no artifact {artifact_id}")
        return row[0], row[1], row[2]
