"""Conversation threads, the nine-section report, and assistant backends.

A backend is anything with respond(thread) -> ChatMessage. The offline
template backend produces the full report deterministically so the whole
pipeline runs without network access; the remote backend speaks a
chat-completion-style JSON API.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import httpx

from .errors import BackendUnavailable, MalformedReport
from .features import TrackFeatures

# The nine numbered report sections, in order. A greeting precedes section 1.
REPORT_HEADINGS = [
    "Tempo and Rhythmic Elements",
    "Harmonic and Melodic Elements",
    "Timbre and Texture",
    "Energy and Dynamics",
    "Cultural and Historical Context",
    "Lyrical Analysis",
    "Conclusion (Overall Musical Preferences)",
    "Disclaimer",
    "Asking for Further Input",
]

SECTION_FIELDS = [
    "tempo_rhythmic",
    "harmonic_melodic",
    "timbre_texture",
    "energy_dynamics",
    "cultural_historical",
    "lyrical",
    "conclusion",
    "disclaimer",
    "further_input",
]

# Minimum token overlap between a response heading and the canonical heading.
HEADING_MATCH_THRESHOLD = 0.8

DIGEST_MARKER = "Extracted features for"

DISCLAIMER_TEXT = (
    "It is possible for the interpretation of the analyses or for the analyses "
    "themselves to be incorrect. If you notice any false or hallucinated "
    "information, please report it to the operators of this service."
)

FURTHER_INPUT_TEXT = (
    "Would you like any further information on the output, or would you like a "
    "deeper explanation of anything technical? I can use metaphors and real-life "
    "examples to explain more technical acoustic or musical features if needed."
)


class ToolKind(str, Enum):
    STEMS = "stems"
    CHORDS = "chords"
    MIDI = "midi"


@dataclass
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str
    timestamp: float = field(default_factory=time.time)
    attachments: list = field(default_factory=list)

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant", "tool"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "content": self.content,
            "timestamp": self.timestamp,
            "attachments": list(self.attachments),
        }


@dataclass
class PendingTool:
    kind: ToolKind
    awaiting_track_selection: bool = True


@dataclass
class ConversationThread:
    messages: list = field(default_factory=list)
    track_ids: list = field(default_factory=list)
    pending_tool: PendingTool | None = None

    def to_dict(self) -> dict:
        return {
            "messages": [m.to_dict() for m in self.messages],
            "track_ids": list(self.track_ids),
            "pending_tool": None
            if self.pending_tool is None
            else {
                "kind": self.pending_tool.kind.value,
                "awaiting_track_selection": self.pending_tool.awaiting_track_selection,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConversationThread":
        pending = d.get("pending_tool")
        return cls(
            messages=[ChatMessage(**m) for m in d["messages"]],
            track_ids=list(d.get("track_ids", [])),
            pending_tool=None
            if pending is None
            else PendingTool(
                kind=ToolKind(pending["kind"]),
                awaiting_track_selection=pending["awaiting_track_selection"],
            ),
        )

    def has_analysis(self) -> bool:
        # an analysis turn is a digest user message answered by the assistant
        for prev, cur in zip(self.messages, self.messages[1:]):
            if (
                prev.role == "user"
                and prev.content.startswith(DIGEST_MARKER)
                and cur.role == "assistant"
            ):
                return True
        return False


@dataclass
class ReportSection:
    heading: str
    body: str

    def to_dict(self) -> dict:
        return {"heading": self.heading, "body": self.body}


@dataclass
class ReportSectionSet:
    greeting: str
    tempo_rhythmic: ReportSection
    harmonic_melodic: ReportSection
    timbre_texture: ReportSection
    energy_dynamics: ReportSection
    cultural_historical: ReportSection
    lyrical: ReportSection
    conclusion: ReportSection
    disclaimer: ReportSection
    further_input: ReportSection

    def sections(self) -> list[ReportSection]:
        return [getattr(self, name) for name in SECTION_FIELDS]

    def to_dict(self) -> dict:
        return {
            "greeting": self.greeting,
            "sections": [
                {"number": i + 1, **section.to_dict()}
                for i, section in enumerate(self.sections())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportSectionSet":
        sections = [ReportSection(s["heading"], s["body"]) for s in d["sections"]]
        return cls(d["greeting"], *sections)


def new_thread() -> ConversationThread:
    return ConversationThread(messages=[ChatMessage(role="system", content=build_system_prompt())])


def build_system_prompt() -> str:
    return (
        resources.files("soundsig.resources")
        .joinpath("system_prompt.txt")
        .read_text(encoding="utf-8")
        .strip()
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _digest_lines(category: str, tracks: list[TrackFeatures]) -> list[str]:
    lines = [category]
    for tf in tracks:
        name = tf.meta.display_name
        if category == REPORT_HEADINGS[0]:
            if tf.tempo_rhythm is None:
                lines.append(f"- {name}: not detected")
            else:
                t = tf.tempo_rhythm
                line = f"- {name}: {_fmt(t.bpm)} BPM, Pulse Clarity: {_fmt(t.pulse_clarity)}"
                if t.octave_ambiguous:
                    line += " (tempo may be half or double time)"
                lines.append(line)
        elif category == REPORT_HEADINGS[1]:
            if tf.harmony is None:
                lines.append(f"- {name}: not detected")
            else:
                h = tf.harmony
                lines.append(
                    f"- {name}: Key: {h.key} {h.mode}, Key Strength: {_fmt(h.key_strength)}"
                )
        elif category == REPORT_HEADINGS[2]:
            lines.append(
                f"- {name}: Brightness: {_fmt(tf.timbre.spectral_centroid_mean)}, "
                f"Fullness: {_fmt(tf.timbre.spectral_bandwidth_mean)}, "
                f"Texture Changes: {_fmt(tf.timbre.spectral_flux_mean)}"
            )
        else:
            lines.append(
                f"- {name}: RMS Energy: {_fmt(tf.energy.rms_energy)}, "
                f"Loudness: {_fmt(tf.energy.loudness)}"
            )
    return lines


def build_feature_digest(tracks: list[TrackFeatures]) -> str:
    """One line per track per category, numbers at two decimals."""
    if not tracks:
        raise ValueError("digest needs at least one track")
    parts = [f"{DIGEST_MARKER} {len(tracks)} track(s):"]
    for category in REPORT_HEADINGS[:4]:
        parts.append("")
        parts.extend(_digest_lines(category, tracks))
    return "\n".join(parts)


_KEYWORD_RE = re.compile(r"\b(stems|chords|midi)\b", re.IGNORECASE)


def detect_tool_keyword(message: str) -> ToolKind | None:
    """Whole-word, case-insensitive scan; the earliest keyword wins."""
    match = _KEYWORD_RE.search(message or "")
    return ToolKind(match.group(1).lower()) if match else None


def _tokens(text: str) -> set:
    return set(re.findall(r"[a-z0-9]+", text.lower()))


_HEADING_RE = re.compile(r"^[#*\s]*(\d)[.)]\s*(.+?)[#*\s]*$", re.MULTILINE)


def parse_report(text: str) -> ReportSectionSet:
    """Split a response into greeting plus the nine numbered sections.

    Headings are matched by number and fuzzy title overlap; anything before
    section 1 is the greeting.
    """
    found = {}
    positions = []
    for match in _HEADING_RE.finditer(text):
        number = int(match.group(1))
        if not 1 <= number <= 9 or number in found:
            continue
        canonical = _tokens(REPORT_HEADINGS[number - 1])
        overlap = len(_tokens(match.group(2)) & canonical) / len(canonical)
        if overlap >= HEADING_MATCH_THRESHOLD:
            found[number] = match
            positions.append((number, match))
    missing = [n for n in range(1, 10) if n not in found]
    if missing:
        raise MalformedReport(
            f"response is missing section(s) {missing}", raw_response=text
        )
    ordered = sorted(positions, key=lambda item: item[1].start())
    if [n for n, _ in ordered] != list(range(1, 10)):
        raise MalformedReport("sections are out of order", raw_response=text)

    greeting = text[: ordered[0][1].start()].strip()
    sections = []
    for i, (number, match) in enumerate(ordered):
        end = ordered[i + 1][1].start() if i + 1 < len(ordered) else len(text)
        body = text[match.end() : end].strip()
        sections.append(ReportSection(heading=REPORT_HEADINGS[number - 1], body=body))
    report = ReportSectionSet(greeting, *sections)
    if "?" not in report.conclusion.body and "?" not in report.further_input.body:
        raise MalformedReport(
            "neither the conclusion nor the further-input section asks a question",
            raw_response=text,
        )
    return report


def run_analysis_turn(thread: ConversationThread, tracks: list[TrackFeatures], backend) -> ReportSectionSet:
    """Feed the feature digest to the backend and validate its report."""
    if not thread.messages or thread.messages[0].role != "system":
        raise ValueError("thread must start with the system prompt")
    if not tracks:
        raise ValueError("at least one track required")
    digest = build_feature_digest(tracks)
    thread.messages.append(ChatMessage(role="user", content=digest))
    response = backend.respond(thread)
    thread.messages.append(response)
    return parse_report(response.content)


def run_chat_turn(thread: ConversationThread, user_text: str, backend) -> ChatMessage:
    """One follow-up turn; tool keywords divert to track selection."""
    if not user_text or not user_text.strip():
        raise ValueError("message text must be non-empty")
    if not thread.has_analysis():
        raise ValueError("chat requires a completed analysis turn")
    # an unanswered selection request expires on the next ordinary message
    thread.pending_tool = None
    kind = detect_tool_keyword(user_text)
    thread.messages.append(ChatMessage(role="user", content=user_text))
    if kind is not None:
        thread.pending_tool = PendingTool(kind=kind)
        request = ChatMessage(
            role="assistant",
            content=(
                f"Which of your uploaded tracks should I run the {kind.value} tool on? "
                "Please select one."
            ),
        )
        thread.messages.append(request)
        return request
    response = backend.respond(thread)
    thread.messages.append(response)
    return response


class OfflineTemplateBackend:
    """Deterministic template backend; no network, no external state."""

    def respond(self, thread: ConversationThread) -> ChatMessage:
        last_user = next(
            (m for m in reversed(thread.messages) if m.role == "user"), None
        )
        if last_user is None:
            raise BackendUnavailable("no user message to respond to")
        if last_user.content.startswith(DIGEST_MARKER):
            return ChatMessage(role="assistant", content=self._report(last_user.content))
        question = last_user.content.strip()
        return ChatMessage(
            role="assistant",
            content=(
                f'You asked: "{question}" The offline assistant cannot elaborate '
                "beyond the extracted features shown in the analysis above; connect "
                "a remote backend for conversational answers."
            ),
        )

    @staticmethod
    def _category_block(digest: str, category: str) -> str:
        lines = digest.splitlines()
        try:
            start = lines.index(category) + 1
        except ValueError:
            return "(no data)"
        block = []
        for line in lines[start:]:
            if not line.startswith("- "):
                break
            block.append(line)
        return "\n".join(block) if block else "(no data)"

    def _report(self, digest: str) -> str:
        track_names = sorted(
            {
                line[2:].split(":", 1)[0]
                for line in digest.splitlines()
                if line.startswith("- ")
            }
        )
        listing = ", ".join(track_names)
        insights = {
            1: "Insights: these tempo and pulse-clarity values describe how fast "
            "each track moves and how plainly its beat comes through.",
            2: "Insights: keys and key strengths describe each track's harmonic "
            "center and how firmly it is established.",
            3: "Insights: brightness, fullness, and texture-change values sketch "
            "the sound color of each track.",
            4: "Insights: RMS energy and loudness describe how powerful each "
            "track is, physically and perceptually.",
        }
        parts = [
            "Welcome to your personalized music analysis session! This offline "
            f"report covers: {listing}.",
        ]
        for i, category in enumerate(REPORT_HEADINGS[:4], start=1):
            parts.append(f"\n{i}. {category}\n")
            parts.append(self._category_block(digest, category))
            parts.append(insights[i])
        parts.append(f"\n5. {REPORT_HEADINGS[4]}\n")
        parts.append(
            "Cultural and historical context is not available offline; connect a "
            "remote assistant backend for artist background."
        )
        parts.append(f"\n6. {REPORT_HEADINGS[5]}\n")
        parts.append(
            "Lyrical analysis is not available offline; connect a remote "
            "assistant backend for lyric themes."
        )
        parts.append(f"\n7. {REPORT_HEADINGS[6]}\n")
        parts.append(
            "Taken together, the measured tempo, key, timbre, and energy values "
            "above summarize the musical character of your uploads. Patterns "
            "across them, such as shared keys or similar energy, point to what "
            "you consistently seek in music."
        )
        parts.append(f"\n8. {REPORT_HEADINGS[7]}\n")
        parts.append(DISCLAIMER_TEXT)
        parts.append(f"\n9. {REPORT_HEADINGS[8]}\n")
        parts.append(FURTHER_INPUT_TEXT)
        return "\n".join(parts)


class RemoteChatBackend:
    """Chat-completion-style HTTPS JSON backend."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None, timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout

    def respond(self, thread: ConversationThread) -> ChatMessage:
        messages = []
        for m in thread.messages:
            role = m.role
            content = m.content
            if role == "tool":
                role, content = "user", f"[tool result] {content}"
            messages.append({"role": role, "content": content})
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(
                self.endpoint,
                json={"model": self.model, "messages": messages},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            content = resp.json()["choices"][0]["message"]["content"]
        except Exception as exc:
            raise BackendUnavailable(f"remote backend request failed: {exc}") from exc
        if not content:
            raise BackendUnavailable("remote backend returned an empty response")
        return ChatMessage(role="assistant", content=content)
