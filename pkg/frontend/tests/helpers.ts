import type {
  ArtifactRecord,
  HistoryResponse,
  TurnRecord,
  TurnResponse,
  UploadResponse,
} from "../src/types.js";

export function artifact(
  id: string,
  kind: ArtifactRecord["kind"],
  overrides: Partial<ArtifactRecord> = {},
): ArtifactRecord {
  return {
    id,
    kind,
    path: `artifacts/${id}.bin`,
    producer: "upload",
    turn_index: 0,
    seq: 0,
    name: "",
    created_at: 0,
    meta: {},
    ...overrides,
  };
}

export function turnRecord(overrides: Partial<TurnRecord>): TurnRecord {
  return {
    index: 0,
    user_utterance: null,
    pointer_events: [],
    plan: [],
    output_artifacts: [],
    reply_text: "",
    status: "ok",
    detail: "",
    ...overrides,
  };
}

export function turnResponse(overrides: Partial<TurnResponse>): TurnResponse {
  return {
    session_id: "s1",
    turn_index: 0,
    status: "ok",
    reply_text: "",
    detail: "",
    plan: [],
    new_artifacts: [],
    active_mask: null,
    open_draft: null,
    ...overrides,
  };
}

export function uploadResponse(
  id: string,
  name: string,
  kind: ArtifactRecord["kind"] = "image",
  turnIndex = 0,
): UploadResponse {
  return { artifact_id: id, kind, name, turn_index: turnIndex };
}

export function history(
  turns: TurnRecord[],
  artifacts: ArtifactRecord[],
  overrides: Partial<HistoryResponse> = {},
): HistoryResponse {
  return {
    session_id: "s1",
    turns,
    artifacts: Object.fromEntries(artifacts.map((a) => [a.id, a])),
    active_mask: null,
    open_draft: null,
    pending_drag: null,
    ...overrides,
  };
}
