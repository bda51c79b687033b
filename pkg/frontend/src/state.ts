// Pure helpers: filename validation, track labels, upload bookkeeping.
// No DOM access here so everything is trivially testable.

import type { SessionState, TrackInfo, Warning } from "./api.js";

export const FORMAT_INSTRUCTION =
  'Please start by uploading your files in the following format: "SongTitle_ArtistName.MP3"';

const SUPPORTED_EXTENSIONS = [".mp3", ".wav"];

// Mirrors the gateway rule so bad names are caught before any bytes move.
export function validateUploadName(name: string): string | null {
  const dot = name.lastIndexOf(".");
  const ext = dot >= 0 ? name.slice(dot).toLowerCase() : "";
  if (!SUPPORTED_EXTENSIONS.includes(ext)) {
    return `${FORMAT_INSTRUCTION} ("${name}" does not end in .mp3 or .wav)`;
  }
  const stem = name.slice(0, dot);
  const underscore = stem.indexOf("_");
  if (underscore <= 0 || underscore === stem.length - 1) {
    return `${FORMAT_INSTRUCTION} ("${name}" must be SongTitle, one underscore, then ArtistName)`;
  }
  return null;
}

export function trackLabel(track: TrackInfo): string {
  return `${track.title} — ${track.artist}`;
}

export type UploadStatus = "pending" | "analyzing" | "done" | "error";

export interface UploadEntry {
  trackId: string | null;
  name: string;
  status: UploadStatus;
  detail: string;
}

// Per-file status shown in the pipeline list, derived purely from gateway
// state so a refresh reconstructs the same view.
export function uploadEntries(
  state: SessionState,
  analysisRunning: boolean
): UploadEntry[] {
  const warningByTrack = new Map<string, Warning>(
    state.warnings.map((w) => [w.track_id, w])
  );
  return state.tracks.map((track) => {
    const warning = warningByTrack.get(track.track_id);
    let status: UploadStatus = "pending";
    let detail = "uploaded";
    if (warning) {
      status = "error";
      detail = warning.message;
    } else if (track.status === "analyzed") {
      status = "done";
      detail = "analyzed";
    } else if (analysisRunning) {
      status = "analyzing";
      detail = "analyzing…";
    }
    return { trackId: track.track_id, name: `${track.title}_${track.artist}`, status, detail };
  });
}
