/** Wire types for the session service, mirrored field-for-field. */

export interface PointerSample {
  x: number;
  y: number;
  t_ms: number;
}

export type ModeHint = "auto" | "select" | "drag" | "draw";

export interface PointerPayload {
  target: string;
  samples: PointerSample[];
  mode_hint?: ModeHint;
  utterance?: string;
}

export interface ArtifactRecord {
  id: string;
  kind: "image" | "mask" | "draft" | "video" | "text";
  path: string;
  producer: string;
  turn_index: number;
  seq: number;
  name: string;
  created_at: number;
  meta: Record<string, unknown>;
}

export interface PlanStepRecord {
  tool: string;
  clause: string;
  bindings: Record<string, unknown>;
}

export type TurnStatus = "ok" | "clarify" | "error";

export interface TurnRecord {
  index: number;
  user_utterance: string | null;
  pointer_events: Array<{ kind?: string; [key: string]: unknown }>;
  plan: PlanStepRecord[];
  output_artifacts: string[];
  reply_text: string;
  status: TurnStatus;
  detail: string;
}

export interface PerceptionSummary {
  kind: string;
  [key: string]: unknown;
}

export interface TurnResponse {
  session_id: string;
  turn_index: number;
  status: TurnStatus;
  reply_text: string;
  detail: string;
  plan: PlanStepRecord[];
  new_artifacts: ArtifactRecord[];
  active_mask: string | null;
  open_draft: string | null;
  perception?: PerceptionSummary;
}

export interface UploadResponse {
  artifact_id: string;
  kind: ArtifactRecord["kind"];
  name: string;
  turn_index: number;
}

export interface HistoryResponse {
  session_id: string;
  turns: TurnRecord[];
  artifacts: Record<string, ArtifactRecord>;
  active_mask: string | null;
  open_draft: string | null;
  pending_drag: { mask_id: string; dx: number; dy: number } | null;
}

export interface HealthResponse {
  status: string;
  kernel_backend: string;
}

export interface RegistryResponse {
  tools: Array<{ name: string; description: string; [key: string]: unknown }>;
}
