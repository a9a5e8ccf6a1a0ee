/** View state as a pure fold over server turns.
 *
 * The rule that keeps the client honest: the rendered view is a function of
 * (server history, in-flight request) and nothing else. Live responses and a
 * reload's history fetch go through the same fold, so replaying history
 * reproduces the live view exactly.
 */

import type {
  ArtifactRecord,
  HistoryResponse,
  TurnRecord,
  TurnResponse,
  TurnStatus,
  UploadResponse,
} from "./types.js";
import type { UiMode } from "./pointer.js";

export const POINTER_LABEL = "[pointer]";

/** What one server turn contributes to the view, shared by the live path
 * (turn responses) and the reload path (history records). */
export interface TurnFacts {
  index: number;
  user: string;
  reply: string;
  status: TurnStatus;
  detail: string;
  outputs: Array<{ id: string; kind: string }>;
}

export interface UiSessionView {
  sessionId: string;
  media: string | null; // artifact shown in the media layer
  mediaTrail: string[]; // superseded media, oldest first (the history strip)
  activeMask: string | null;
  openDraft: string | null;
  transcript: TurnFacts[];
}

export function emptyView(sessionId: string): UiSessionView {
  return {
    sessionId,
    media: null,
    mediaTrail: [],
    activeMask: null,
    openDraft: null,
    transcript: [],
  };
}

export function factsFromRecord(
  turn: TurnRecord,
  artifacts: Record<string, ArtifactRecord>,
): TurnFacts {
  const outputs = turn.output_artifacts.map((id) => ({
    id,
    kind: artifacts[id]?.kind ?? "",
  }));
  let user: string;
  if (turn.user_utterance) {
    user = turn.user_utterance;
  } else if (turn.pointer_events.length > 0) {
    user = POINTER_LABEL;
  } else {
    const first = turn.output_artifacts[0];
    const name = (first && artifacts[first]?.name) || first || "";
    user = `uploaded ${name}`;
  }
  return {
    index: turn.index,
    user,
    reply: turn.reply_text,
    status: turn.status,
    detail: turn.detail,
    outputs,
  };
}

export function factsFromTurnResponse(
  response: TurnResponse,
  sent: { utterance?: string; pointer?: boolean },
): TurnFacts {
  return {
    index: response.turn_index,
    user: sent.utterance?.trim() || (sent.pointer ? POINTER_LABEL : ""),
    reply: response.reply_text,
    status: response.status,
    detail: response.detail,
    outputs: response.new_artifacts.map((a) => ({ id: a.id, kind: a.kind })),
  };
}

export function factsFromUpload(response: UploadResponse): TurnFacts {
  return {
    index: response.turn_index,
    user: `uploaded ${response.name}`,
    // mirrors the reply the service records, so a reload reproduces the
    // transcript verbatim
    reply: `stored ${response.name} as ${response.artifact_id}`,
    status: "ok",
    detail: "",
    outputs: [{ id: response.artifact_id, kind: response.kind }],
  };
}

/** Fold one turn into the view: append to the transcript and swap any image
 * or video output into the media layer, pushing the prior media onto the
 * trail. Pure; returns a new view. */
export function applyFacts(view: UiSessionView, facts: TurnFacts): UiSessionView {
  let media = view.media;
  const mediaTrail = [...view.mediaTrail];
  for (const output of facts.outputs) {
    if (output.kind === "image" || output.kind === "video") {
      if (media !== null) mediaTrail.push(media);
      media = output.id;
    }
  }
  return {
    ...view,
    media,
    mediaTrail,
    transcript: [...view.transcript, facts],
  };
}

export function viewFromHistory(history: HistoryResponse): UiSessionView {
  let view = emptyView(history.session_id);
  for (const turn of history.turns) {
    view = applyFacts(view, factsFromRecord(turn, history.artifacts));
  }
  return { ...view, activeMask: history.active_mask, openDraft: history.open_draft };
}

// -- live event loop ----------------------------------------------------------

export interface UiState {
  view: UiSessionView;
  mode: UiMode;
  busy: boolean; // one in-flight mutating request; inputs disabled while set
  toast: string | null;
}

export function initialState(): UiState {
  return { view: emptyView(""), mode: "Select", busy: false, toast: null };
}

export type UiEvent =
  | { type: "session"; sessionId: string }
  | { type: "request" }
  | { type: "upload"; response: UploadResponse }
  | { type: "turn"; response: TurnResponse; utterance?: string; pointer?: boolean }
  | { type: "history"; response: HistoryResponse }
  | { type: "failure"; message: string }
  | { type: "mode"; mode: UiMode }
  | { type: "toastCleared" };

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.type) {
    case "session":
      return { ...state, view: emptyView(event.sessionId) };
    case "request":
      return { ...state, busy: true, toast: null };
    case "upload":
      return {
        ...state,
        busy: false,
        view: applyFacts(state.view, factsFromUpload(event.response)),
      };
    case "turn": {
      const facts = factsFromTurnResponse(event.response, {
        utterance: event.utterance,
        pointer: event.pointer,
      });
      const view = applyFacts(state.view, facts);
      // the server's word on the overlay is authoritative after every
      // acknowledged request
      return {
        ...state,
        busy: false,
        view: {
          ...view,
          activeMask: event.response.active_mask,
          openDraft: event.response.open_draft,
        },
      };
    }
    case "history":
      return { ...state, busy: false, view: viewFromHistory(event.response) };
    case "failure":
      return { ...state, busy: false, toast: event.message };
    case "mode":
      return { ...state, mode: event.mode };
    case "toastCleared":
      return { ...state, toast: null };
  }
}

/** Inputs stay disabled until the previous request is acknowledged. */
export function canSend(state: UiState): boolean {
  return !state.busy && state.view.sessionId !== "";
}
