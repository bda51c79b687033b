// Application wiring: one session per page, gateway polling during analysis,
// one in-flight chat request at a time. All state of record lives on the
// gateway; this class only caches the latest SessionState snapshot.

import { GatewayClient, GatewayError, type Gateway, type SessionState } from "./api.js";
import { FORMAT_INSTRUCTION, uploadEntries, validateUploadName } from "./state.js";
import {
  renderInlineError,
  renderReport,
  renderSpectrograms,
  renderToolResult,
  renderTrackDropdown,
  renderTranscript,
  renderUploadList,
} from "./views.js";

export interface AppElements {
  instruction: HTMLElement;
  uploadInput: HTMLInputElement;
  uploadError: HTMLElement;
  uploadList: HTMLElement;
  analyzeButton: HTMLButtonElement;
  spectrograms: HTMLElement;
  report: HTMLElement;
  transcript: HTMLElement;
  dropdown: HTMLElement;
  toolResults: HTMLElement;
  chatForm: HTMLElement;
  chatInput: HTMLInputElement;
  chatSend: HTMLButtonElement;
  spinner: HTMLElement;
}

const POLL_INTERVAL_MS = 1000;

export class App {
  private sessionId: string | null = null;
  private state: SessionState | null = null;
  private analysisRunning = false;
  private chatInFlight = false;

  constructor(private client: Gateway, private ui: AppElements) {}

  async start(): Promise<void> {
    this.ui.instruction.textContent = FORMAT_INSTRUCTION;
    this.sessionId = await this.client.createSession();
    this.ui.uploadInput.addEventListener("change", () => {
      void this.handleFiles();
    });
    this.ui.analyzeButton.addEventListener("click", () => {
      void this.handleAnalyze();
    });
    this.ui.chatSend.addEventListener("click", () => {
      void this.handleChatSubmit();
    });
    this.ui.chatInput.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") void this.handleChatSubmit();
    });
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    this.state = await this.client.getSession(this.sessionId);
    this.renderAll();
  }

  private renderAll(): void {
    if (!this.state) return;
    renderUploadList(this.ui.uploadList, uploadEntries(this.state, this.analysisRunning));
    renderReport(this.ui.report, this.state.report);
    renderTranscript(this.ui.transcript, this.state.messages);
    renderSpectrograms(this.ui.spectrograms, this.state.tracks, (id) =>
      this.client.artifactUrl(id)
    );
    if (this.state.pending_tool) {
      renderTrackDropdown(
        this.ui.dropdown,
        this.state.pending_tool,
        this.state.tracks,
        (trackId) => void this.handleTrackSelection(trackId)
      );
    } else {
      this.ui.dropdown.replaceChildren();
    }
    this.updateChatAvailability();
  }

  private updateChatAvailability(): void {
    const busy = this.chatInFlight || this.analysisRunning;
    this.ui.chatInput.disabled = busy || !this.state?.analyzed;
    this.ui.chatSend.disabled = busy || !this.state?.analyzed;
    this.ui.spinner.style.display = busy ? "" : "none";
  }

  async handleFiles(selected?: File[]): Promise<void> {
    const files = selected ?? this.ui.uploadInput.files;
    if (!files || !this.sessionId) return;
    renderInlineError(this.ui.uploadError, null);
    for (const file of Array.from(files)) {
      const problem = validateUploadName(file.name);
      if (problem) {
        renderInlineError(this.ui.uploadError, problem);
        continue;
      }
      try {
        await this.client.uploadTrack(this.sessionId, file, file.name);
      } catch (error) {
        // show the API's own error body verbatim
        const message = error instanceof GatewayError ? error.message : String(error);
        renderInlineError(this.ui.uploadError, message);
      }
    }
    this.ui.uploadInput.value = "";
    await this.refresh();
  }

  async handleAnalyze(): Promise<void> {
    if (!this.sessionId || this.analysisRunning) return;
    this.analysisRunning = true;
    this.renderAll();
    const poll = setInterval(() => {
      void this.refresh();
    }, POLL_INTERVAL_MS);
    try {
      await this.client.analyze(this.sessionId);
    } catch (error) {
      const message = error instanceof GatewayError ? error.message : String(error);
      renderInlineError(this.ui.uploadError, message);
    } finally {
      clearInterval(poll);
      this.analysisRunning = false;
    }
    await this.refresh();
  }

  async handleChatSubmit(): Promise<void> {
    const text = this.ui.chatInput.value.trim();
    if (!text || !this.sessionId || this.chatInFlight) return;
    this.chatInFlight = true;
    this.updateChatAvailability();
    try {
      const result = await this.client.postMessage(this.sessionId, text);
      this.ui.chatInput.value = "";
      if (result.type === "tool_result" && result.envelope) {
        renderToolResult(this.ui.toolResults, result.envelope, (id) =>
          this.client.artifactUrl(id)
        );
      }
    } catch (error) {
      const message = error instanceof GatewayError ? error.message : String(error);
      renderInlineError(this.ui.uploadError, message);
    } finally {
      this.chatInFlight = false;
    }
    await this.refresh();
  }

  async handleTrackSelection(trackId: string): Promise<void> {
    if (!this.sessionId || this.chatInFlight) return;
    this.chatInFlight = true;
    this.updateChatAvailability();
    try {
      const result = await this.client.postMessage(this.sessionId, "", trackId);
      if (result.type === "tool_result" && result.envelope) {
        renderToolResult(this.ui.toolResults, result.envelope, (id) =>
          this.client.artifactUrl(id)
        );
      }
    } finally {
      this.chatInFlight = false;
    }
    await this.refresh();
  }
}

export function collectElements(root: Document): AppElements {
  const get = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing #${id} in page`);
    return node as T;
  };
  return {
    instruction: get("format-instruction"),
    uploadInput: get<HTMLInputElement>("upload-input"),
    uploadError: get("upload-error"),
    uploadList: get("upload-list"),
    analyzeButton: get<HTMLButtonElement>("analyze-button"),
    spectrograms: get("spectrograms"),
    report: get("report"),
    transcript: get("transcript"),
    dropdown: get("dropdown"),
    toolResults: get("tool-results"),
    chatForm: get("chat-form"),
    chatInput: get<HTMLInputElement>("chat-input"),
    chatSend: get<HTMLButtonElement>("chat-send"),
    spinner: get("spinner"),
  };
}

// Browser bootstrap; tests construct App directly instead.
declare const window: (Window & typeof globalThis) | undefined;
if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("format-instruction")) {
  const app = new App(new GatewayClient(), collectElements(document));
  void app.start();
}
