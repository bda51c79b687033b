// DOM builders. Each function replaces the children of its container so a
// render is always a pure function of the data passed in.

import type { ChatMessage, Report, ToolEnvelope, TrackInfo } from "./api.js";
import { trackLabel, type UploadEntry } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderUploadList(container: HTMLElement, entries: UploadEntry[]): void {
  container.replaceChildren();
  const list = el("ul", "upload-list");
  for (const entry of entries) {
    const item = el("li", `upload-entry status-${entry.status}`);
    item.append(
      el("span", "upload-name", entry.name),
      el("span", "upload-status", entry.detail)
    );
    list.append(item);
  }
  container.append(list);
}

export function renderInlineError(container: HTMLElement, message: string | null): void {
  container.replaceChildren();
  if (message) {
    container.append(el("p", "inline-error", message));
  }
}

export function renderReport(container: HTMLElement, report: Report | null): void {
  container.replaceChildren();
  if (!report) return;
  if (report.greeting) {
    container.append(el("p", "report-greeting", report.greeting));
  }
  for (const section of report.sections) {
    const block = el("section", "report-section");
    block.append(el("h3", "report-heading", `${section.number}. ${section.heading}`));
    const body = el("div", "report-body");
    for (const line of section.body.split("\n")) {
      body.append(el("p", undefined, line));
    }
    block.append(body);
    container.append(block);
  }
}

export function renderTranscript(container: HTMLElement, messages: ChatMessage[]): void {
  container.replaceChildren();
  for (const message of messages) {
    const row = el("div", `chat-message role-${message.role}`);
    row.append(el("span", "chat-role", message.role));
    row.append(el("span", "chat-content", message.content));
    container.append(row);
  }
}

export function renderTrackDropdown(
  container: HTMLElement,
  tool: string,
  tracks: TrackInfo[],
  onSelect: (trackId: string) => void
): void {
  container.replaceChildren();
  const wrapper = el("div", "track-dropdown");
  wrapper.append(
    el("p", "dropdown-prompt", `Select the track to run the ${tool} tool on:`)
  );
  const select = el("select", "track-select");
  const placeholder = el("option", undefined, "Choose a track…");
  placeholder.value = "";
  select.append(placeholder);
  for (const track of tracks) {
    const option = el("option", undefined, trackLabel(track));
    option.value = track.track_id;
    select.append(option);
  }
  select.addEventListener("change", () => {
    if (select.value) onSelect(select.value);
  });
  wrapper.append(select);
  container.append(wrapper);
}

function artifactDownloadLink(url: string, label: string): HTMLAnchorElement {
  const anchor = document.createElement("a");
  anchor.className = "artifact-download";
  anchor.href = url;
  anchor.setAttribute("download", "");
  anchor.textContent = label;
  return anchor;
}

export function renderToolResult(
  container: HTMLElement,
  envelope: ToolEnvelope,
  artifactUrl: (id: string) => string
): void {
  const block = el("div", `tool-result tool-${envelope.kind}`);
  block.append(el("p", "tool-message", envelope.message));

  if (envelope.table) {
    const table = el("table", "chord-table");
    const head = el("tr");
    for (const column of ["Start Time", "End Time", "Chord", "Confidence"]) {
      head.append(el("th", undefined, column));
    }
    table.append(head);
    for (const row of envelope.table) {
      const tr = el("tr");
      tr.append(
        el("td", undefined, String(row["Start Time"])),
        el("td", undefined, String(row["End Time"])),
        el("td", undefined, row.Chord),
        el("td", undefined, String(row.Confidence))
      );
      table.append(tr);
    }
    block.append(table);
  }

  for (const artifact of envelope.artifacts) {
    const url = artifactUrl(artifact.id);
    const item = el("div", `artifact artifact-${artifact.kind}`);
    if (artifact.kind === "stem_audio") {
      const audio = document.createElement("audio");
      audio.controls = true;
      audio.src = url;
      item.append(el("span", "artifact-label", artifact.stem ?? "audio"));
      item.append(audio);
      item.append(artifactDownloadLink(url, "download"));
    } else if (artifact.kind === "midi_file") {
      item.append(artifactDownloadLink(url, "download MIDI"));
    } else if (artifact.kind === "spectrogram_png") {
      const img = document.createElement("img");
      img.className = "spectrogram";
      img.src = url;
      item.append(img);
    } else {
      item.append(artifactDownloadLink(url, `download ${artifact.kind}`));
    }
    block.append(item);
  }
  container.append(block);
}

export function renderSpectrograms(
  container: HTMLElement,
  tracks: TrackInfo[],
  artifactUrl: (id: string) => string
): void {
  container.replaceChildren();
  for (const track of tracks) {
    if (!track.spectrogram_artifact) continue;
    const figure = el("figure", "spectrogram-figure");
    const img = document.createElement("img");
    img.className = "spectrogram";
    img.src = artifactUrl(track.spectrogram_artifact);
    img.alt = `Spectrogram of ${trackLabel(track)}`;
    figure.append(img);
    figure.append(el("figcaption", undefined, trackLabel(track)));
    container.append(figure);
  }
}
