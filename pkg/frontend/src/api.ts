// Typed client for the gateway JSON API. Everything goes through one fetch
// function against one base URL, so the app never talks to another origin.

export interface TrackInfo {
  track_id: string;
  title: string;
  artist: string;
  status: string;
  spectrogram_artifact: string | null;
}

export interface ReportSection {
  number: number;
  heading: string;
  body: string;
}

export interface Report {
  greeting: string;
  sections: ReportSection[];
}

export interface Warning {
  track_id: string;
  code: string;
  message: string;
}

export interface ChatMessage {
  role: string;
  content: string;
  timestamp: number;
  attachments: string[];
}

export interface SessionState {
  session_id: string;
  tracks: TrackInfo[];
  analyzed: boolean;
  report: Report | null;
  warnings: Warning[];
  pending_tool: string | null;
  messages: ChatMessage[];
  artifacts: string[];
}

export interface ArtifactEntry {
  id: string;
  kind: string;
  media_type: string;
  stem?: string;
}

export interface ChordRow {
  "Start Time": number;
  "End Time": number;
  Chord: string;
  Confidence: number;
}

export interface ToolEnvelope {
  kind: string;
  track_id: string;
  message: string;
  artifacts: ArtifactEntry[];
  table?: ChordRow[];
}

export interface MessageResult {
  type: "chat" | "tool_prompt" | "tool_result";
  message: ChatMessage;
  pending_tool: string | null;
  envelope: ToolEnvelope | null;
}

export class GatewayError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

// What the app needs from the backend; GatewayClient is the HTTP realization.
export interface Gateway {
  createSession(): Promise<string>;
  getSession(sessionId: string): Promise<SessionState>;
  uploadTrack(sessionId: string, data: Blob, filename: string): Promise<TrackInfo>;
  analyze(sessionId: string): Promise<{ report: Report; warnings: Warning[] }>;
  postMessage(sessionId: string, text: string, selectedTrack?: string): Promise<MessageResult>;
  artifactUrl(artifactId: string): string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient implements Gateway {
  constructor(
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private base: string = ""
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let code = "error";
      let message = `request failed with status ${resp.status}`;
      try {
        const body = await resp.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new GatewayError(code, message, resp.status);
    }
    return (await resp.json()) as T;
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  async uploadTrack(sessionId: string, data: Blob, filename: string): Promise<TrackInfo> {
    const form = new FormData();
    form.append("file", data, filename);
    form.append("filename", filename);
    return this.request(`/sessions/${sessionId}/tracks`, {
      method: "POST",
      body: form,
    });
  }

  analyze(sessionId: string): Promise<{ report: Report; warnings: Warning[] }> {
    return this.request(`/sessions/${sessionId}/analyze`, { method: "POST" });
  }

  postMessage(
    sessionId: string,
    text: string,
    selectedTrack?: string
  ): Promise<MessageResult> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, selected_track: selectedTrack ?? null }),
    });
  }

  artifactUrl(artifactId: string): string {
    return `${this.base}/artifacts/${artifactId}`;
  }
}
