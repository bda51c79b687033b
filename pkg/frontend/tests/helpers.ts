// In-memory stand-in for the gateway, mirroring its message/tool semantics.

import type {
  ChatMessage,
  MessageResult,
  Report,
  SessionState,
  ToolEnvelope,
  TrackInfo,
  Warning,
} from "../src/api.js";

export const REPORT_HEADINGS = [
  "Tempo and Rhythmic Elements",
  "Harmonic and Melodic Elements",
  "Timbre and Texture",
  "Energy and Dynamics",
  "Cultural and Historical Context",
  "Lyrical Analysis",
  "Conclusion (Overall Musical Preferences)",
  "Disclaimer",
  "Asking for Further Input",
];

export function sampleReport(): Report {
  return {
    greeting: "Welcome to your personalized music analysis session!",
    sections: REPORT_HEADINGS.map((heading, i) => ({
      number: i + 1,
      heading,
      body: `Body of ${heading}.` + (i >= 6 ? " Anything else?" : ""),
    })),
  };
}

const KEYWORDS = ["stems", "chords", "midi"];

export class FakeGateway {
  tracks: TrackInfo[] = [];
  report: Report | null = null;
  warnings: Warning[] = [];
  messages: ChatMessage[] = [];
  pendingTool: string | null = null;
  artifacts = new Map<string, { kind: string; media: string }>();
  private counter = 0;

  async createSession(): Promise<string> {
    return "session-1";
  }

  async getSession(_id: string): Promise<SessionState> {
    return {
      session_id: "session-1",
      tracks: [...this.tracks],
      analyzed: this.report !== null,
      report: this.report,
      warnings: [...this.warnings],
      pending_tool: this.pendingTool,
      messages: [...this.messages],
      artifacts: [...this.artifacts.keys()],
    };
  }

  async uploadTrack(_id: string, _data: Blob, filename: string): Promise<TrackInfo> {
    if (!filename.includes("_")) {
      throw Object.assign(new Error(`Please upload your songs in the format "SongTitle_ArtistName.MP3". no underscore in ${filename}`), {
        code: "malformed_filename",
        status: 422,
      });
    }
    const stem = filename.replace(/\.(mp3|wav)$/i, "");
    const [title, artist] = [stem.slice(0, stem.indexOf("_")), stem.slice(stem.indexOf("_") + 1)];
    const track: TrackInfo = {
      track_id: `track-${++this.counter}`,
      title,
      artist,
      status: "uploaded",
      spectrogram_artifact: null,
    };
    this.tracks.push(track);
    return track;
  }

  async analyze(_id: string): Promise<{ report: Report; warnings: Warning[] }> {
    for (const track of this.tracks) {
      track.status = "analyzed";
      const artifactId = `spec-${track.track_id}`;
      track.spectrogram_artifact = artifactId;
      this.artifacts.set(artifactId, { kind: "spectrogram_png", media: "image/png" });
    }
    this.report = sampleReport();
    return { report: this.report, warnings: this.warnings };
  }

  async postMessage(
    _id: string,
    text: string,
    selectedTrack?: string
  ): Promise<MessageResult> {
    if (this.pendingTool && selectedTrack) {
      const tool = this.pendingTool;
      this.pendingTool = null;
      const envelope = this.toolEnvelope(tool, selectedTrack);
      const message: ChatMessage = {
        role: "tool",
        content: envelope.message,
        timestamp: 0,
        attachments: envelope.artifacts.map((a) => a.id),
      };
      this.messages.push(message);
      return { type: "tool_result", message, pending_tool: null, envelope };
    }
    const keyword = KEYWORDS.find((k) => new RegExp(`\\b${k}\\b`, "i").test(text));
    this.messages.push({ role: "user", content: text, timestamp: 0, attachments: [] });
    if (keyword) {
      this.pendingTool = keyword;
      const message: ChatMessage = {
        role: "assistant",
        content: `Which track should I run the ${keyword} tool on?`,
        timestamp: 0,
        attachments: [],
      };
      this.messages.push(message);
      return { type: "tool_prompt", message, pending_tool: keyword, envelope: null };
    }
    const message: ChatMessage = {
      role: "assistant",
      content: `You asked: "${text}"`,
      timestamp: 0,
      attachments: [],
    };
    this.messages.push(message);
    return { type: "chat", message, pending_tool: null, envelope: null };
  }

  private toolEnvelope(tool: string, trackId: string): ToolEnvelope {
    if (tool === "chords") {
      const id = `chords-${trackId}`;
      this.artifacts.set(id, { kind: "chord_table", media: "text/csv" });
      return {
        kind: "chords",
        track_id: trackId,
        message: "Chord analysis ready.",
        artifacts: [{ id, kind: "chord_table", media_type: "text/csv" }],
        table: [
          { "Start Time": 0.0, "End Time": 2.0, Chord: "C:maj", Confidence: 0.93 },
          { "Start Time": 2.0, "End Time": 4.0, Chord: "F:maj", Confidence: 0.91 },
        ],
      };
    }
    if (tool === "midi") {
      const id = `midi-${trackId}`;
      this.artifacts.set(id, { kind: "midi_file", media: "audio/midi" });
      return {
        kind: "midi",
        track_id: trackId,
        message: "MIDI ready.",
        artifacts: [{ id, kind: "midi_file", media_type: "audio/midi" }],
      };
    }
    const artifacts = ["vocals", "drums", "bass", "other"].map((stem) => {
      const id = `stem-${stem}-${trackId}`;
      this.artifacts.set(id, { kind: "stem_audio", media: "audio/wav" });
      return { id, kind: "stem_audio", media_type: "audio/wav", stem };
    });
    return {
      kind: "stems",
      track_id: trackId,
      message: "Stems ready.",
      artifacts,
    };
  }

  artifactUrl(id: string): string {
    return `/artifacts/${id}`;
  }
}

export function mountPage(): void {
  document.body.innerHTML = `
    <p id="format-instruction"></p>
    <input id="upload-input" type="file" multiple>
    <div id="upload-error"></div>
    <div id="upload-list"></div>
    <button id="analyze-button">Analyze</button>
    <div id="spectrograms"></div>
    <div id="report"></div>
    <div id="transcript"></div>
    <div id="dropdown"></div>
    <div id="tool-results"></div>
    <div id="chat-form">
      <input id="chat-input" type="text">
      <button id="chat-send">Send</button>
      <span id="spinner" style="display:none"></span>
    </div>`;
}
