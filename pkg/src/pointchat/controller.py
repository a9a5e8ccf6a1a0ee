"""Language command handling: parse, decompose, select tools, resolve and
validate arguments, and drive plan execution.

The rule pipeline here is the auxiliary control path and is fully
deterministic; when a real language-model backend is configured it is asked
for a whole plan first, and the rule pipeline replaces that plan unless every
step validates.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from pointchat.errors import ClarifyNeeded, EmptyUtterance, InvalidArgument, MissingArgument
from pointchat.llm import LlmBackend, NullLlm
from pointchat.session import SessionStore
from pointchat.toolkit.descriptors import (
    ARG_TO_ARTIFACT_KIND,
    ARTIFACT_KINDS,
    ArgKind,
    OutputKind,
    ToolDescriptor,
    ToolResult,
)

logger = logging.getLogger(__name__)

STOPWORDS = frozenset(
    """a an the this that these those there here i me my mine you your yours we us
    our it its is am are was were be been being do did have has had will would
    shall should can could may might must please to of in at by for with from
    into onto over under out up down off as and or but if so than too very just
    not no yes again then now on""".split()
)

# Approximates "verbs" without a POS tagger; configurable per deployment.
ACTION_LEXICON = frozenset(
    """add answer ask caption create crop cut delete describe draw erase extract
    fill generate give highlight make move paint question read remove rename
    replace show""".split()
)

SEQUENCE_SPLIT_RE = re.compile(r"\s*(?:;|\band\s+then\b|\bthen\b)\s*", re.IGNORECASE)
TOKEN_RE = re.compile(r"[a-z0-9_]+")
FILE_TOKEN_RE = re.compile(r"[\w-]+\.(?:png|jpg|jpeg|json|txt)", re.IGNORECASE)
NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")
QUOTE_RES = (
    re.compile(r'"([^"]*)"'),
    re.compile(r"“([^”]*)”"),
    re.compile(r"(?:^|(?<=\s))'([^']*)'(?=[\s.,;!?]|$)"),
    re.compile(r"(?:^|(?<=\s))‘([^’]*)’(?=[\s.,;!?]|$)"),
)


@dataclass(frozen=True)
class ParsedInstruction:
    raw_text: str
    content_tokens: tuple[str, ...]
    action_tokens: tuple[str, ...]
    object_tokens: tuple[str, ...]
    quoted_spans: tuple[str, ...]


def parse_instruction(utterance: str, lexicon: frozenset = ACTION_LEXICON) -> ParsedInstruction:
    """Deterministic tokenization: quoted spans come out first and are never
    tokenized; remaining words are lowercased, punctuation-stripped, and
    stopword-filtered, then split into action vs object by the lexicon."""
    raw = utterance.strip()
    if not raw:
        raise EmptyUtterance("utterance is empty")
    spans: list[str] = []
    rest = raw
    for quote_re in QUOTE_RES:
        def _grab(match):
            spans.append(match.group(1))
            return " "
        rest = quote_re.sub(_grab, rest)
    tokens = tuple(t for t in TOKEN_RE.findall(rest.lower()) if t not in STOPWORDS)
    actions = tuple(t for t in tokens if t in lexicon)
    objects = tuple(t for t in tokens if t not in lexicon)
    return ParsedInstruction(
        raw_text=raw,
        content_tokens=tokens,
        action_tokens=actions,
        object_tokens=objects,
        quoted_spans=tuple(spans),
    )


@dataclass(frozen=True)
class ToolSelection:
    descriptor: ToolDescriptor
    score: float


@dataclass(frozen=True)
class Clarify:
    question: str
    clause: str = ""


def _desc_tokens(descriptor: ToolDescriptor) -> frozenset:
    return frozenset(TOKEN_RE.findall(descriptor.description.lower()))


def _name_tokens(descriptor: ToolDescriptor) -> frozenset:
    return frozenset(descriptor.name.lower().split("_"))


def score_tool(parsed: ParsedInstruction, descriptor: ToolDescriptor) -> float:
    tokens = set(parsed.content_tokens)
    return 3.0 * len(tokens & _name_tokens(descriptor)) + 1.0 * len(tokens & _desc_tokens(descriptor))


def select_tool(
    parsed: ParsedInstruction,
    registry_snapshot: Sequence[ToolDescriptor],
    threshold: float = 3.0,
):
    """Argmax of the token-overlap score; registration order breaks ties.
    Below-threshold scores come back as a Clarify question, not an error."""
    best: Optional[ToolSelection] = None
    for descriptor in registry_snapshot:
        score = score_tool(parsed, descriptor)
        if best is None or score > best.score:
            best = ToolSelection(descriptor, score)
    if best is None or best.score < threshold:
        return Clarify(
            question=f"I couldn't match \"{parsed.raw_text}\" to any tool I know. Could you rephrase?",
            clause=parsed.raw_text,
        )
    return best


# --- argument sources --------------------------------------------------------

SRC_LITERAL = "literal"
SRC_ARTIFACT = "artifact"
SRC_OUTPUT_OF = "output_of"
SRC_POINTER = "pointer"


@dataclass(frozen=True)
class ArgSource:
    source: str                      # one of the SRC_* tags
    value: str = ""                  # literal text or artifact id or pointer slot
    step: int = -1                   # for output_of
    slot: int = 0

    def to_dict(self) -> dict:
        d = {"source": self.source, "value": self.value}
        if self.source == SRC_OUTPUT_OF:
            d.update(step=self.step, slot=self.slot)
        return d


@dataclass
class PlanStep:
    tool: str
    clause: str
    bindings: dict = field(default_factory=dict)   # arg name -> ArgSource

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "clause": self.clause,
            "bindings": {k: v.to_dict() for k, v in self.bindings.items()},
        }


@dataclass
class TaskPlan:
    steps: list = field(default_factory=list)
    origin: str = "rules"            # rules | llm

    def validate_dataflow(self) -> None:
        for i, step in enumerate(self.steps):
            for source in step.bindings.values():
                if source.source == SRC_OUTPUT_OF and not (0 <= source.step < i):
                    raise ValueError(f"step {i} references output of step {source.step}")

    def to_dict(self) -> dict:
        return {"origin": self.origin, "steps": [s.to_dict() for s in self.steps]}


@dataclass
class PointerSnapshot:
    """Pointer-derived state visible to argument resolution for this turn."""

    active_mask: Optional[str] = None
    open_draft: Optional[str] = None
    pending_drag: Optional[dict] = None
    target_image: Optional[str] = None    # image the current/most recent gesture landed on
    target_video: Optional[str] = None


@dataclass
class StepResult:
    tool: str
    result: ToolResult

    def to_dict(self) -> dict:
        return {"tool": self.tool, "result": self.result.to_dict()}


@dataclass
class TurnOutcome:
    status: str                       # ok | clarify | error
    reply_text: str = ""
    step_results: list = field(default_factory=list)
    new_artifacts: list = field(default_factory=list)
    clarify_question: str = ""
    error: str = ""
    plan: Optional[TaskPlan] = None


def edit_distance(a: str, b: str) -> int:
    """Plain Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class Controller:
    def __init__(
        self,
        registry_snapshot: Sequence[ToolDescriptor],
        store: SessionStore,
        llm: Optional[LlmBackend] = None,
        dispatcher: Optional[Callable[[ToolDescriptor, dict], ToolResult]] = None,
        clarify_threshold: float = 3.0,
        lexicon: frozenset = ACTION_LEXICON,
    ):
        self.registry = tuple(registry_snapshot)
        self.store = store
        self.llm = llm or NullLlm()
        self.dispatcher = dispatcher
        self.clarify_threshold = clarify_threshold
        self.lexicon = lexicon

    def _lookup(self, name: str) -> Optional[ToolDescriptor]:
        for d in self.registry:
            if d.name == name:
                return d
        return None

    # -- planning -------------------------------------------------------------

    def split_clauses(self, utterance: str) -> list[str]:
        return [c for c in SEQUENCE_SPLIT_RE.split(utterance) if c.strip()]

    def plan_rules(self, utterance: str) -> TaskPlan:
        """Decompose on sequencing connectives ("and then", "then", ";"), select
        a tool per clause, and chain image/video dataflow between adjacent steps."""
        clauses = self.split_clauses(utterance)
        if not clauses:
            raise EmptyUtterance("utterance is empty")
        steps: list[PlanStep] = []
        prev_descriptor: Optional[ToolDescriptor] = None
        for clause in clauses:
            parsed = parse_instruction(clause, self.lexicon)
            selected = select_tool(parsed, self.registry, self.clarify_threshold)
            if isinstance(selected, Clarify):
                raise ClarifyNeeded(clause, selected.question)
            descriptor = selected.descriptor
            bindings: dict[str, ArgSource] = {}
            if prev_descriptor is not None:
                wanted = {
                    OutputKind.IMAGE: ArgKind.IMAGE,
                    OutputKind.VIDEO: ArgKind.VIDEO,
                }.get(prev_descriptor.output_kind)
                if wanted is not None:
                    for arg in descriptor.args:
                        if arg.kind == wanted:
                            bindings[arg.name] = ArgSource(SRC_OUTPUT_OF, step=len(steps) - 1, slot=0)
                            break
            steps.append(PlanStep(tool=descriptor.name, clause=clause, bindings=bindings))
            prev_descriptor = descriptor
        plan = TaskPlan(steps=steps, origin="rules")
        plan.validate_dataflow()
        return plan

    def plan_llm(self, utterance: str, session_id: str) -> Optional[TaskPlan]:
        """Ask the language-model backend for a whole plan. Returns None when the
        backend is silent, unparseable, or any step fails validation; the caller
        then falls back to the rule pipeline."""
        tool_lines = "\n".join(
            f"- {d.name}({', '.join(a.name for a in d.args)})" for d in self.registry
        )
        prompt = (
            f"Plan tool calls for the instruction: {utterance}\n"
            f"Available tools:\n{tool_lines}\n"
            'Answer with JSON only: [{"tool": "<name>", "args": {"<arg>": "<value>"}}]'
        )
        completion = self.llm.complete(prompt, self.store.history_as_dialogue(session_id))
        if not completion.strip():
            return None
        match = re.search(r"\[.*\]", completion, re.DOTALL)
        if not match:
            return None
        try:
            raw_steps = json.loads(match.group(0))
        except ValueError:
            return None
        if not isinstance(raw_steps, list) or not raw_steps:
            return None
        steps = []
        for item in raw_steps:
            if not isinstance(item, dict):
                return None
            descriptor = self._lookup(str(item.get("tool", "")))
            args = item.get("args", {})
            if descriptor is None or not isinstance(args, dict):
                return None
            if any(a.name not in args for a in descriptor.required_args()):
                return None
            try:
                corrected = self.validate_and_correct(
                    descriptor, {k: str(v) for k, v in args.items()}, session_id
                )
            except InvalidArgument:
                return None
            bindings = {k: ArgSource(SRC_LITERAL, value=v) for k, v in corrected.items()}
            steps.append(PlanStep(tool=descriptor.name, clause=utterance, bindings=bindings))
        return TaskPlan(steps=steps, origin="llm")

    def plan(self, utterance: str, session_id: str = "") -> TaskPlan:
        """Language-model-first planning with the rule pipeline as the fallback
        controller."""
        if session_id and not isinstance(self.llm, NullLlm):
            llm_plan = self.plan_llm(utterance, session_id)
            if llm_plan is not None:
                logger.info("accepted llm plan with %d steps", len(llm_plan.steps))
                return llm_plan
        return self.plan_rules(utterance)

    # -- argument resolution --------------------------------------------------

    def resolve_arguments(
        self,
        descriptor: ToolDescriptor,
        parsed: ParsedInstruction,
        session_id: str,
        pointer: PointerSnapshot,
        preset: Optional[dict] = None,
    ) -> dict[str, str]:
        """Fill the arg map by first success of: explicit literal in the
        utterance, pointer state of the turn, a history query to the language
        model, then the most recent artifact of the required kind."""
        args: dict[str, str] = dict(preset or {})
        quoted = list(parsed.quoted_spans)
        file_tokens = [t for t in FILE_TOKEN_RE.findall(parsed.raw_text)]

        for arg in descriptor.args:
            if arg.name in args:
                continue
            value = self._resolve_literal(arg, parsed, session_id, quoted, file_tokens)
            if value is None:
                value = self._resolve_pointer(arg, pointer)
            if value is not None:
                args[arg.name] = value

        unresolved = [a for a in descriptor.args if a.name not in args and a.kind in ARTIFACT_KINDS]
        if unresolved:
            self._resolve_from_llm(descriptor, unresolved, session_id, args)
        for arg in descriptor.args:
            if arg.name in args or arg.kind not in ARTIFACT_KINDS:
                continue
            latest = self.store.latest_artifact(session_id, ARG_TO_ARTIFACT_KIND[arg.kind])
            if latest is not None:
                args[arg.name] = latest

        for arg in descriptor.required_args():
            if arg.name not in args:
                raise MissingArgument(arg.name, descriptor.name)
        return args

    def _resolve_literal(self, arg, parsed, session_id, quoted: list, file_tokens: list):
        if arg.kind == ArgKind.QUESTION:
            return parsed.raw_text
        if arg.kind == ArgKind.PROMPT:
            if quoted:
                return quoted.pop(0)
            return parsed.raw_text
        if arg.kind == ArgKind.TIMESTAMP:
            match = NUMBER_RE.search(parsed.raw_text)
            return match.group(0) if match else None
        # artifact kinds: an exact id/name mention wins; an unmatched file-like
        # token is passed through for validate_and_correct to fuzzy-fix
        want_kind = ARG_TO_ARTIFACT_KIND[arg.kind]
        state = self.store.get(session_id)
        for token in list(file_tokens):
            resolved = self.store.resolve_artifact(session_id, token)
            if resolved is not None and state.artifacts[resolved].kind == want_kind:
                file_tokens.remove(token)
                return resolved
        for token in list(file_tokens):
            if self.store.resolve_artifact(session_id, token) is None:
                file_tokens.remove(token)
                return token
        return None

    @staticmethod
    def _resolve_pointer(arg, pointer: PointerSnapshot):
        if arg.kind == ArgKind.MASK:
            return pointer.active_mask
        if arg.kind == ArgKind.DRAFT:
            return pointer.open_draft
        if arg.kind == ArgKind.IMAGE:
            return pointer.target_image
        if arg.kind == ArgKind.VIDEO:
            return pointer.target_video
        return None

    def _resolve_from_llm(self, descriptor, unresolved, session_id, args: dict) -> None:
        names = " and ".join(a.name for a in unresolved)
        prompt = f"What's the {names} of the '{descriptor.name}' API?"
        completion = self.llm.complete(prompt, self.store.history_as_dialogue(session_id))
        if not completion:
            return
        state = self.store.get(session_id)
        mentioned = []
        for token in FILE_TOKEN_RE.findall(completion):
            resolved = self.store.resolve_artifact(session_id, token)
            if resolved is not None and resolved not in mentioned:
                mentioned.append(resolved)
        for arg in unresolved:
            want_kind = ARG_TO_ARTIFACT_KIND[arg.kind]
            for artifact_id in mentioned:
                if state.artifacts[artifact_id].kind == want_kind:
                    args[arg.name] = artifact_id
                    mentioned.remove(artifact_id)
                    break

    # -- validation -----------------------------------------------------------

    def validate_and_correct(self, descriptor: ToolDescriptor, args: dict, session_id: str) -> dict:
        """Strip decoration, verify artifact references (kind included), and
        apply rule-based corrections: fuzzy name match within edit distance 2,
        then single-candidate substitution. Anything still invalid raises."""
        corrected: dict[str, str] = {}
        for arg in descriptor.args:
            if arg.name not in args:
                continue
            value = str(args[arg.name]).strip().strip("\"'“”‘’").strip()
            if arg.kind == ArgKind.TIMESTAMP:
                try:
                    t = float(value)
                except ValueError:
                    raise InvalidArgument(arg.name, f"'{value}' is not a number")
                if t < 0:
                    raise InvalidArgument(arg.name, "timestamp must be >= 0")
                corrected[arg.name] = value
                continue
            if arg.kind not in ARTIFACT_KINDS:
                corrected[arg.name] = value
                continue
            corrected[arg.name] = self._correct_artifact_ref(arg, value, session_id)
        return corrected

    def _correct_artifact_ref(self, arg, value: str, session_id: str) -> str:
        want_kind = ARG_TO_ARTIFACT_KIND[arg.kind]
        if not session_id:
            raise InvalidArgument(arg.name, "no session to resolve against")
        state = self.store.get(session_id)
        resolved = self.store.resolve_artifact(session_id, value)
        if resolved is not None and state.artifacts[resolved].kind == want_kind:
            return resolved
        candidates = self.store.artifacts_of_kind(session_id, want_kind)
        if not candidates:
            raise InvalidArgument(arg.name, f"no {want_kind} artifact in the session matches '{value}'")
        base = Path(value).name
        best_id, best_distance = None, 3
        for artifact in candidates:
            for candidate_name in filter(None, (artifact.name, artifact.id)):
                distance = edit_distance(base, candidate_name)
                if distance < best_distance:
                    best_id, best_distance = artifact.id, distance
        if best_id is not None:
            return best_id
        if len(candidates) == 1:
            return candidates[0].id
        raise InvalidArgument(arg.name, f"'{value}' matches none of {len(candidates)} {want_kind} artifacts")

    # -- execution ------------------------------------------------------------

    def execute(
        self,
        plan: TaskPlan,
        session_id: str,
        pointer: PointerSnapshot,
        register_outputs: Callable[[ToolDescriptor, ToolResult], list],
        dispatcher: Optional[Callable[[ToolDescriptor, dict], ToolResult]] = None,
    ) -> TurnOutcome:
        """Run steps in order. Outputs register as artifacts before the next
        step resolves; a failing step halts execution and reports alongside the
        completed outputs. Nothing reaches the dispatcher unvalidated."""
        dispatch = dispatcher or self.dispatcher
        if dispatch is None:
            raise RuntimeError("controller has no dispatcher")
        plan.validate_dataflow()
        step_results: list[StepResult] = []
        new_artifacts: list[str] = []
        outputs_by_step: dict[int, ToolResult] = {}
        for index, step in enumerate(plan.steps):
            descriptor = self._lookup(step.tool)
            if descriptor is None:
                return self._halt(plan, step_results, new_artifacts, index, f"unknown tool '{step.tool}'")
            preset = {}
            for name, source in step.bindings.items():
                if source.source == SRC_OUTPUT_OF:
                    result = outputs_by_step.get(source.step)
                    if result is None or source.slot >= len(result.outputs):
                        return self._halt(plan, step_results, new_artifacts, index,
                                          f"step {index} has no upstream output to bind")
                    preset[name] = result.outputs[source.slot].get("artifact_id", "")
                elif source.source in (SRC_LITERAL, SRC_ARTIFACT):
                    preset[name] = source.value
                elif source.source == SRC_POINTER:
                    preset[name] = source.value
            try:
                parsed = parse_instruction(step.clause, self.lexicon)
                resolved = self.resolve_arguments(descriptor, parsed, session_id, pointer, preset)
                validated = self.validate_and_correct(descriptor, resolved, session_id)
                result = dispatch(descriptor, validated)
            except MissingArgument as exc:
                return self._halt(plan, step_results, new_artifacts, index, str(exc), question=exc.question)
            except Exception as exc:  # per-step errors propagate with their index
                return self._halt(plan, step_results, new_artifacts, index, f"{type(exc).__name__}: {exc}")
            registered = register_outputs(descriptor, result)
            new_artifacts.extend(registered)
            outputs_by_step[index] = result
            step_results.append(StepResult(tool=descriptor.name, result=result))
        return TurnOutcome(
            status="ok",
            reply_text=_summarize(step_results),
            step_results=step_results,
            new_artifacts=new_artifacts,
            plan=plan,
        )

    @staticmethod
    def _halt(plan, step_results, new_artifacts, index, message, question: str = "") -> TurnOutcome:
        summary = _summarize(step_results)
        prefix = f"{summary} " if summary else ""
        if question:
            return TurnOutcome(
                status="clarify",
                reply_text=f"{prefix}{question}",
                step_results=step_results,
                new_artifacts=new_artifacts,
                clarify_question=question,
                plan=plan,
            )
        return TurnOutcome(
            status="error",
            reply_text=f"{prefix}step {index + 1} failed: {message}",
            step_results=step_results,
            new_artifacts=new_artifacts,
            error=f"step {index + 1}: {message}",
            plan=plan,
        )


def _summarize(step_results: list) -> str:
    """One line naming each tool invoked and each artifact produced."""
    parts = []
    for sr in step_results:
        artifacts = [o["artifact_id"] for o in sr.result.outputs if "artifact_id" in o]
        texts = [o["text"] for o in sr.result.outputs if "text" in o]
        piece = sr.tool
        if artifacts:
            piece += " -> " + ", ".join(artifacts)
        if texts:
            piece += ": " + " | ".join(texts)
        parts.append(piece)
    return "; then ".join(parts)
