"""Trace replay and corpus evaluation.

A trace is line-delimited JSON: a versioned header line, then one action per
line (upload, pointer, chat). Actions may carry an `expect` object with any of
`expected_tool` (the tool the first plan step must route to), an
`expected_status`, and `expected_artifact_hash` (full sha256 of the step's
first new artifact). Replays run against a real engine; the corpus evaluator
aggregates routing accuracy per utterance family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Optional

from pointchat.engine import Engine
from pointchat.errors import EmptyCorpus, MalformedTrace, PointChatError

TRACE_VERSION = 1

ACTIONS = ("upload", "pointer", "chat")


@dataclass
class TraceHeader:
    name: str
    family: str = ""
    version: int = TRACE_VERSION


@dataclass
class StepReport:
    line_no: int
    action: str
    status: str = ""                     # engine turn status, or "error"
    routed_tool: Optional[str] = None
    expected_tool: Optional[str] = None
    expected_status: Optional[str] = None
    expected_hash: Optional[str] = None
    artifact_ids: list = field(default_factory=list)
    artifact_hash: Optional[str] = None  # sha256 of the first new artifact
    detail: str = ""

    @property
    def tool_ok(self) -> Optional[bool]:
        if self.expected_tool is None:
            return None
        return self.routed_tool == self.expected_tool

    @property
    def status_ok(self) -> Optional[bool]:
        if self.expected_status is None:
            return None
        return self.status == self.expected_status

    @property
    def hash_ok(self) -> Optional[bool]:
        if self.expected_hash is None:
            return None
        return self.artifact_hash == self.expected_hash

    @property
    def passed(self) -> bool:
        checks = [self.tool_ok, self.status_ok, self.hash_ok]
        if any(c is False for c in checks):
            return False
        if all(c is None for c in checks):
            # no expectations: the step passes unless it blew up outright
            return self.status != "error" or self.expected_status == "error"
        return True


@dataclass
class TraceReport:
    header: TraceHeader
    path: str
    steps: list = field(default_factory=list)
    session_id: str = ""

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.steps)

    def lines(self) -> list[str]:
        out = []
        for s in self.steps:
            verdict = "ok " if s.passed else "FAIL"
            extras = []
            if s.expected_tool is not None:
                extras.append(f"tool={s.routed_tool or '-'}/{s.expected_tool}")
            if s.expected_status is not None:
                extras.append(f"status={s.status}/{s.expected_status}")
            if s.expected_hash is not None:
                extras.append(f"hash={'match' if s.hash_ok else 'mismatch'}")
            if s.detail and not s.passed:
                extras.append(s.detail)
            out.append(f"{verdict} line {s.line_no} {s.action} {' '.join(extras)}".rstrip())
        out.append(f"{'PASS' if self.passed else 'FAIL'} {self.header.name} "
                   f"({sum(s.passed for s in self.steps)}/{len(self.steps)} steps)")
        return out


def parse_trace(path: str | Path) -> tuple[TraceHeader, list[tuple[int, dict]]]:
    """Read and structurally validate a trace file. Returns the header and
    (line number, action dict) pairs; raises MalformedTrace with the line."""
    path = Path(path)
    lines = path.read_text().splitlines()
    numbered = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not numbered:
        raise MalformedTrace(0, "trace file is empty")
    header_no, header_line = numbered[0]
    try:
        header_doc = json.loads(header_line)
    except ValueError as exc:
        raise MalformedTrace(header_no, f"header is not JSON: {exc}") from exc
    if not isinstance(header_doc, dict) or "trace_version" not in header_doc:
        raise MalformedTrace(header_no, "header must be an object with trace_version")
    if header_doc["trace_version"] != TRACE_VERSION:
        raise MalformedTrace(header_no, f"unsupported trace_version {header_doc['trace_version']}")
    header = TraceHeader(
        name=str(header_doc.get("name", path.stem)),
        family=str(header_doc.get("family", "")),
        version=TRACE_VERSION,
    )
    actions = []
    for line_no, line in numbered[1:]:
        try:
            doc = json.loads(line)
        except ValueError as exc:
            raise MalformedTrace(line_no, f"not JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("action") not in ACTIONS:
            raise MalformedTrace(line_no, f"action must be one of {ACTIONS}")
        if doc["action"] == "upload" and "file" not in doc:
            raise MalformedTrace(line_no, "upload action needs a 'file'")
        if doc["action"] == "pointer" and "samples" not in doc:
            raise MalformedTrace(line_no, "pointer action needs 'samples'")
        if doc["action"] == "chat" and not str(doc.get("utterance", "")).strip():
            raise MalformedTrace(line_no, "chat action needs an 'utterance'")
        expect = doc.get("expect", {})
        if not isinstance(expect, dict):
            raise MalformedTrace(line_no, "'expect' must be an object")
        actions.append((line_no, doc))
    return header, actions


def replay_trace(path: str | Path, engine: Engine) -> TraceReport:
    """Run a trace in a fresh session of the given engine and evaluate every
    step's expectations. Engine-level failures become failed steps, not crashes."""
    path = Path(path)
    header, actions = parse_trace(path)
    session_id = engine.create_session()
    report = TraceReport(header=header, path=str(path), session_id=session_id)
    for line_no, doc in actions:
        expect = doc.get("expect", {})
        step = StepReport(
            line_no=line_no,
            action=doc["action"],
            expected_tool=expect.get("expected_tool"),
            expected_status=expect.get("expected_status"),
            expected_hash=expect.get("expected_artifact_hash"),
        )
        try:
            response = _run_action(engine, session_id, doc, path.parent)
        except (PointChatError, ValueError, KeyError, OSError) as exc:
            step.status = "error"
            step.detail = f"{type(exc).__name__}: {exc}"
            report.steps.append(step)
            continue
        step.status = response.get("status", "ok")
        step.detail = response.get("detail", "")
        plan = response.get("plan") or []
        if plan:
            step.routed_tool = plan[0].get("tool")
        new_artifacts = response.get("new_artifacts") or []
        if doc["action"] == "upload" and "artifact_id" in response:
            step.artifact_ids = [response["artifact_id"]]
        else:
            step.artifact_ids = [a["id"] for a in new_artifacts]
        if step.artifact_ids:
            data, _, _ = engine.artifact_payload(session_id, step.artifact_ids[0])
            step.artifact_hash = sha256(data).hexdigest()
        report.steps.append(step)
    return report


def _run_action(engine: Engine, session_id: str, doc: dict, base_dir: Path) -> dict:
    if doc["action"] == "upload":
        file_path = (base_dir / doc["file"]).resolve()
        ocr = None
        if doc.get("ocr"):
            ocr = (base_dir / doc["ocr"]).resolve().read_bytes()
        return engine.upload_artifact(
            session_id,
            doc.get("name") or file_path.name,
            file_path.read_bytes(),
            ocr_sidecar=ocr,
        )
    if doc["action"] == "pointer":
        payload = {k: doc[k] for k in ("target", "samples", "mode_hint", "utterance") if k in doc}
        return engine.pointer_turn(session_id, payload)
    return engine.chat_turn(session_id, doc["utterance"])


@dataclass
class FamilyScore:
    family: str
    scored: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.scored if self.scored else 0.0


@dataclass
class CorpusReport:
    traces: list = field(default_factory=list)          # TraceReport
    families: dict = field(default_factory=dict)        # family -> FamilyScore
    clarifications: int = 0                             # clarify steps with no expected_tool

    @property
    def scored(self) -> int:
        return sum(f.scored for f in self.families.values())

    @property
    def correct(self) -> int:
        return sum(f.correct for f in self.families.values())

    @property
    def accuracy(self) -> float:
        return self.correct / self.scored if self.scored else 0.0

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.traces)

    def lines(self) -> list[str]:
        out = []
        for family in sorted(self.families):
            score = self.families[family]
            out.append(f"{family}: {score.correct}/{score.scored} routed correctly")
        out.append(f"overall routing accuracy: {self.correct}/{self.scored}"
                   f" = {100.0 * self.accuracy:.1f}%")
        if self.clarifications:
            out.append(f"clarification steps (unscored): {self.clarifications}")
        out.append(f"corpus {'PASS' if self.passed else 'FAIL'} ({len(self.traces)} traces)")
        return out


def evaluate_corpus(corpus_dir: str | Path, engine: Engine) -> CorpusReport:
    """Replay every .trace under the directory and aggregate routing accuracy.

    Only steps that state an expected_tool enter the accuracy denominator;
    clarify outcomes on expectation-free steps are counted separately.
    """
    corpus_dir = Path(corpus_dir)
    trace_paths = sorted(corpus_dir.glob("*.trace"))
    if not trace_paths:
        raise EmptyCorpus(f"no .trace files under {corpus_dir}")
    report = CorpusReport()
    for path in trace_paths:
        trace_report = replay_trace(path, engine)
        report.traces.append(trace_report)
        family = trace_report.header.family or "unspecified"
        score = report.families.setdefault(family, FamilyScore(family))
        for step in trace_report.steps:
            if step.expected_tool is not None:
                score.scored += 1
                if step.tool_ok:
                    score.correct += 1
            elif step.status == "clarify":
                report.clarifications += 1
    return report
