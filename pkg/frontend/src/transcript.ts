/** Render model for the chat column: turns become bubbles, clarify questions
 * are highlighted, errors are marked, and artifact chips ride on the reply. */

import type { UiSessionView, TurnFacts } from "./state.js";

export interface Bubble {
  turnIndex: number;
  role: "user" | "assistant";
  text: string;
  highlight: boolean; // clarify question awaiting an answer
  error: boolean;
  artifacts: string[]; // ids to render as chips under the bubble
}

function assistantText(facts: TurnFacts): string {
  if (facts.status === "clarify") return facts.detail || facts.reply;
  if (facts.status === "error") return facts.detail || "something went wrong";
  return facts.reply;
}

export function renderTranscript(view: UiSessionView): Bubble[] {
  const bubbles: Bubble[] = [];
  for (const facts of view.transcript) {
    bubbles.push({
      turnIndex: facts.index,
      role: "user",
      text: facts.user,
      highlight: false,
      error: false,
      artifacts: [],
    });
    bubbles.push({
      turnIndex: facts.index,
      role: "assistant",
      text: assistantText(facts),
      highlight: facts.status === "clarify",
      error: facts.status === "error",
      artifacts: facts.outputs.map((o) => o.id),
    });
  }
  return bubbles;
}

/** The media strip: prior versions oldest-first, then the current view. */
export function mediaStrip(view: UiSessionView): string[] {
  return view.media === null ? [...view.mediaTrail] : [...view.mediaTrail, view.media];
}
