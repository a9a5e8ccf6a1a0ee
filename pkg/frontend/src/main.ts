/** DOM wiring. Everything with behavior worth testing lives in the other
 * modules; this file only connects them to elements and the canvas. */

import { ApiClient, friendlyMessage } from "./api.js";
import { GestureRecorder, gesturePayload, type UiMode } from "./pointer.js";
import {
  draftPolylines,
  maskBitsFromRgba,
  tintMask,
  type DraftDocument,
} from "./overlay.js";
import {
  canSend,
  initialState,
  reduce,
  type UiEvent,
  type UiState,
} from "./state.js";
import { mediaStrip, renderTranscript } from "./transcript.js";

const api = new ApiClient(window.location.origin);
let state: UiState = initialState();
const recorder = new GestureRecorder();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const mediaCanvas = $<HTMLCanvasElement>("media");
const overlayCanvas = $<HTMLCanvasElement>("overlay");
const transcriptBox = $("transcript");
const strip = $("strip");
const toast = $("toast");
const fileInput = $<HTMLInputElement>("file");
const chatInput = $<HTMLInputElement>("chat");
const sendButton = $<HTMLButtonElement>("send");
const modeSelect = $<HTMLSelectElement>("mode");

function dispatch(event: UiEvent): void {
  state = reduce(state, event);
  void render();
}

async function call<T>(work: () => Promise<T>, onDone: (value: T) => UiEvent): Promise<void> {
  if (!canSend(state)) return;
  dispatch({ type: "request" });
  try {
    const value = await work();
    dispatch(onDone(value));
  } catch (err) {
    dispatch({ type: "failure", message: friendlyMessage(err) });
  }
}

// -- rendering ----------------------------------------------------------------

async function loadImage(ref: string): Promise<ImageBitmap> {
  const { bytes } = await api.fetchArtifact(state.view.sessionId, ref);
  return createImageBitmap(new Blob([bytes], { type: "image/png" }));
}

async function render(): Promise<void> {
  sendButton.disabled = !canSend(state);
  fileInput.disabled = state.busy;
  toast.textContent = state.toast ?? "";
  toast.hidden = state.toast === null;

  transcriptBox.replaceChildren(
    ...renderTranscript(state.view).map((bubble) => {
      const div = document.createElement("div");
      div.className = `bubble ${bubble.role}` +
        (bubble.highlight ? " clarify" : "") +
        (bubble.error ? " error" : "");
      div.textContent = bubble.text;
      for (const id of bubble.artifacts) {
        const chip = document.createElement("span");
        chip.className = "chip";
        chip.textContent = id;
        div.appendChild(chip);
      }
      return div;
    }),
  );
  transcriptBox.scrollTop = transcriptBox.scrollHeight;

  strip.replaceChildren(
    ...mediaStrip(state.view).map((id) => {
      const img = document.createElement("img");
      img.src = api.artifactUrl(state.view.sessionId, id);
      img.title = id;
      return img;
    }),
  );

  await paintMedia();
}

async function paintMedia(): Promise<void> {
  const { media, activeMask, openDraft, sessionId } = state.view;
  const ctx = mediaCanvas.getContext("2d")!;
  const overlayCtx = overlayCanvas.getContext("2d")!;
  if (!media || !sessionId) {
    ctx.clearRect(0, 0, mediaCanvas.width, mediaCanvas.height);
    overlayCtx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
    return;
  }
  const bitmap = await loadImage(media);
  mediaCanvas.width = overlayCanvas.width = bitmap.width;
  mediaCanvas.height = overlayCanvas.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);
  overlayCtx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);

  if (activeMask) {
    const maskBitmap = await loadImage(activeMask);
    const scratch = new OffscreenCanvas(bitmap.width, bitmap.height);
    const sctx = scratch.getContext("2d")!;
    sctx.drawImage(maskBitmap, 0, 0, bitmap.width, bitmap.height);
    const bits = maskBitsFromRgba(
      sctx.getImageData(0, 0, bitmap.width, bitmap.height).data,
    );
    const base = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
    const tinted = new ImageData(bitmap.width, bitmap.height);
    tinted.data.set(tintMask(base.data, bits));
    overlayCtx.putImageData(tinted, 0, 0);
  }

  if (openDraft) {
    const { bytes } = await api.fetchArtifact(sessionId, openDraft);
    const draft = JSON.parse(new TextDecoder().decode(bytes)) as DraftDocument;
    for (const line of draftPolylines(draft, bitmap.width, bitmap.height)) {
      overlayCtx.strokeStyle = line.color;
      overlayCtx.lineWidth = line.width;
      overlayCtx.beginPath();
      line.points.forEach(([x, y], i) =>
        i === 0 ? overlayCtx.moveTo(x, y) : overlayCtx.lineTo(x, y),
      );
      overlayCtx.stroke();
    }
  }
}

// -- input wiring -------------------------------------------------------------

function canvasPoint(ev: PointerEvent): { x: number; y: number } {
  const rect = overlayCanvas.getBoundingClientRect();
  const scaleX = overlayCanvas.width / rect.width;
  const scaleY = overlayCanvas.height / rect.height;
  return { x: (ev.clientX - rect.left) * scaleX, y: (ev.clientY - rect.top) * scaleY };
}

overlayCanvas.addEventListener("pointerdown", (ev) => {
  if (!canSend(state) || !state.view.media) return;
  const { x, y } = canvasPoint(ev);
  recorder.begin(x, y, overlayCanvas.width, overlayCanvas.height, ev.timeStamp);
  overlayCanvas.setPointerCapture(ev.pointerId);
});

overlayCanvas.addEventListener("pointermove", (ev) => {
  const { x, y } = canvasPoint(ev);
  recorder.move(x, y, overlayCanvas.width, overlayCanvas.height, ev.timeStamp);
});

overlayCanvas.addEventListener("pointerup", (ev) => {
  const { x, y } = canvasPoint(ev);
  const samples = recorder.end(x, y, overlayCanvas.width, overlayCanvas.height, ev.timeStamp);
  const target = state.view.media;
  if (samples.length === 0 || !target) return;
  const utterance = chatInput.value;
  chatInput.value = "";
  void call(
    () =>
      api.pointerTurn(
        state.view.sessionId,
        gesturePayload(target, samples, state.mode, utterance),
      ),
    (response) => ({
      type: "turn",
      response,
      utterance: utterance.trim() || undefined,
      pointer: true,
    }),
  );
});

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  fileInput.value = "";
  void call(
    () => api.uploadArtifact(state.view.sessionId, { name: file.name, data: file }),
    (response) => ({ type: "upload", response }),
  );
});

function sendChat(): void {
  const utterance = chatInput.value.trim();
  if (!utterance) return;
  chatInput.value = "";
  void call(
    () => api.chatTurn(state.view.sessionId, utterance),
    (response) => ({ type: "turn", response, utterance }),
  );
}

sendButton.addEventListener("click", sendChat);
chatInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") sendChat();
});

modeSelect.addEventListener("change", () => {
  dispatch({ type: "mode", mode: modeSelect.value as UiMode });
});

// -- boot ---------------------------------------------------------------------

async function boot(): Promise<void> {
  const saved = sessionStorage.getItem("pointchat-session");
  if (saved) {
    try {
      const history = await api.history(saved);
      dispatch({ type: "session", sessionId: saved });
      dispatch({ type: "history", response: history });
      return;
    } catch {
      sessionStorage.removeItem("pointchat-session"); // stale session id
    }
  }
  const sessionId = await api.createSession();
  sessionStorage.setItem("pointchat-session", sessionId);
  dispatch({ type: "session", sessionId });
}

void boot();
