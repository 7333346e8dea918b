// Assembles socket, view model, renderer, and input into one running app.
// Kept separate from the bootstrapping in main.ts so tests can mount the
// same wiring against any document and server.

import { MapInput } from "./input";
import { drawMap } from "./map";
import { grabPanelRefs, renderPanels, type PanelRefs } from "./panels";
import { SessionSocket, type SocketStatus } from "./socket";
import { attachSpeech } from "./speech";
import { canAct, connectionChanged, initialView, reduce,
         type ViewModel } from "./view";
import { chatFrame, decisionFrame,
         type ServerMessage } from "./wire";

export interface AppOptions {
  baseHttp: string;
  sessionId: string;
  WebSocketImpl?: new (url: string) => WebSocket;
}

export interface App {
  getView(): ViewModel;
  socket: SessionSocket;
  input: MapInput;
  submitChat(text: string, channel?: "chat" | "transcript"): boolean;
  decide(proposalId: number, decision: "approve" | "reject"): void;
  dispose(): void;
}

export function wsUrl(baseHttp: string, sessionId: string): string {
  return `${baseHttp.replace(/^http/, "ws")}/session/${sessionId}/ws`;
}

export function createApp(doc: Document, opts: AppOptions): App {
  const refs: PanelRefs = grabPanelRefs(doc);
  const canvas = doc.getElementById("map") as HTMLCanvasElement | null;
  if (!canvas) throw new Error("missing #map canvas");
  const form = doc.getElementById("chat-form") as HTMLFormElement | null;
  const chatInput = doc.getElementById("chat-input") as
    HTMLInputElement | null;
  const micButton = doc.getElementById("mic") as HTMLButtonElement | null;
  if (!form || !chatInput || !micButton) {
    throw new Error("missing chat controls");
  }

  let view = initialView();
  let renderQueued = false;

  const win = doc.defaultView;
  const raf: (fn: () => void) => void =
    win && typeof win.requestAnimationFrame === "function"
      ? (fn) => win.requestAnimationFrame(fn)
      : (fn) => fn();

  const render = () => {
    renderQueued = false;
    drawMap(canvas, view.state, input.selection);
    renderPanels(refs, view, {
      onDecision: (proposalId, decision) => decide(proposalId, decision),
    });
  };
  const scheduleRender = () => {
    if (renderQueued) return;
    renderQueued = true;
    raf(render);
  };

  const socket = new SessionSocket(
    wsUrl(opts.baseHttp, opts.sessionId),
    {
      onMessage: (msg: ServerMessage) => {
        view = reduce(view, msg);
        if (view.seqGap) {
          view = { ...view, seqGap: false };
          socket.resync();
        }
        scheduleRender();
      },
      onStatus: (status: SocketStatus) => {
        view = connectionChanged(view, status);
        scheduleRender();
      },
    },
    opts.WebSocketImpl ?? (globalThis.WebSocket as AppOptions["WebSocketImpl"]));

  const input = new MapInput({
    canvas,
    getView: () => view,
    send: (frame) => { socket.send(frame); },
    onChange: scheduleRender,
  });
  input.attach();

  const submitChat = (text: string,
                      channel: "chat" | "transcript" = "chat"): boolean => {
    const trimmed = text.trim();
    if (!trimmed || !canAct(view)) return false;
    return socket.send(chatFrame(trimmed, channel));
  };

  const decide = (proposalId: number,
                  decision: "approve" | "reject"): void => {
    socket.send(decisionFrame(proposalId, decision));
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const channel =
      chatInput.dataset.channel === "transcript" ? "transcript" : "chat";
    if (submitChat(chatInput.value, channel)) {
      chatInput.value = "";
      chatInput.dataset.channel = "chat";
    }
  });
  attachSpeech(micButton, chatInput);

  socket.connect();
  scheduleRender();

  return {
    getView: () => view,
    socket,
    input,
    submitChat,
    decide,
    dispose: () => {
      input.detach();
      socket.close();
    },
  };
}
