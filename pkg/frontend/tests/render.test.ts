import { beforeEach, describe, expect, it, vi } from "vitest";

import { drawMap } from "../src/map";
import { grabPanelRefs, renderPanels } from "../src/panels";
import { connectionChanged, initialView, reduce,
         type ViewModel } from "../src/view";
import type { StateDoc } from "../src/wire";
import {
  chatIn, episodeEndMsg, errorMsg, proposalMsg, resetSeq, sampleProposal,
  sampleState, stateUpdate,
} from "./helpers";

// jsdom has no 2d context, so the map tests drive drawMap with a recording
// stub and count draw operations instead of pixels.

interface Op { op: string; args: unknown[] }

function recordingCanvas(size = 640) {
  const ops: Op[] = [];
  const record = (op: string) =>
    (...args: unknown[]) => { ops.push({ op, args }); };
  const ctx = {
    fillStyle: "", strokeStyle: "", globalAlpha: 1, lineWidth: 1,
    font: "", textAlign: "", textBaseline: "",
    fillRect: record("fillRect"), strokeRect: record("strokeRect"),
    beginPath: record("beginPath"), closePath: record("closePath"),
    moveTo: record("moveTo"), lineTo: record("lineTo"),
    arc: record("arc"), fill: record("fill"), stroke: record("stroke"),
    fillText: record("fillText"),
  };
  const canvas = {
    width: size, height: size,
    getContext: () => ctx,
  } as unknown as HTMLCanvasElement;
  return { canvas, ops };
}

function count(ops: Op[], op: string): number {
  return ops.filter((o) => o.op === op).length;
}

describe("map rendering", () => {
  it("draws one sprite per building and unit", () => {
    // 1 Base + 6 Workers on the grid: 7 sprites.
    const state: StateDoc = {
      width: 8, height: 8, tick: 0, tick_limit: 100, terminal: null,
      factions: [{
        id: 0, minerals: 50, gas: 0, supply_used: 6, supply_cap: 15,
        units: Array.from({ length: 6 }, (_, i) => ({
          id: 2 + i, kind: "Worker", pos: [i, 2] as [number, number],
          hp: 40, tags: ["ground"], order: { type: "idle" },
        })),
        buildings: [{ id: 1, kind: "Base", pos: [1, 1], hp: 500, queue: [] }],
      }],
      nodes: [],
    };
    const { canvas, ops } = recordingCanvas();
    drawMap(canvas, state, new Set());
    const buildingRects = count(ops, "fillRect") - 1; // minus background
    const unitDots = count(ops, "arc");
    expect(buildingRects + unitDots).toBe(7);
    expect(count(ops, "fillText")).toBe(1); // the Base glyph
  });

  it("skips depleted resource nodes", () => {
    const state: StateDoc = {
      width: 8, height: 8, tick: 0, tick_limit: 100, terminal: null,
      factions: [],
      nodes: [
        { index: 0, pos: [0, 1], kind: "mineral", amount_milli: 1000 },
        { index: 1, pos: [7, 6], kind: "gas", amount_milli: 0 },
      ],
    };
    const { canvas, ops } = recordingCanvas();
    drawMap(canvas, state, new Set());
    expect(count(ops, "closePath")).toBe(1); // one diamond, not two
  });

  it("rings only selected own units", () => {
    const { canvas, ops } = recordingCanvas();
    drawMap(canvas, sampleState(0), new Set([2, 12]));
    // Sample state holds 5 unit dots; the ring on own unit 2 adds one arc.
    // Enemy unit 12 must not get a ring even if its id leaks into the set.
    expect(count(ops, "arc")).toBe(6);
  });

  it("tolerates a canvas without a 2d context", () => {
    const bare = document.createElement("canvas");
    (bare as unknown as { getContext: () => null }).getContext = () => null;
    expect(() => drawMap(bare, sampleState(0), new Set())).not.toThrow();
  });
});

function mountPanels(): ReturnType<typeof grabPanelRefs> {
  document.body.innerHTML = `
    <div id="status"></div>
    <div id="frame-line"></div>
    <div id="resources"></div>
    <div id="policy"></div>
    <div id="proposal"></div>
    <div id="transcript"></div>
    <div id="banner" hidden></div>
    <div id="toasts"></div>
  `;
  return grabPanelRefs(document);
}

function runningView(): ViewModel {
  resetSeq();
  let view = connectionChanged(initialView(), "open");
  view = reduce(view, stateUpdate({ tick: 10 }));
  view = reduce(view, chatIn(1, "sky army style", 10));
  return view;
}

const noop = { onDecision: () => {} };

describe("panels", () => {
  beforeEach(() => { document.body.innerHTML = ""; });

  it("renders status, resources, and the policy dashboard", () => {
    const refs = mountPanels();
    renderPanels(refs, runningView(), noop);
    expect(refs.status.textContent).toBe("open | running | tick 10");
    expect(refs.status.dataset.connection).toBe("open");
    expect(refs.resources.textContent)
      .toBe("minerals 50  gas 0  supply 4/15");
    expect(refs.policy.textContent).toContain("policy: balanced_macro");
    const revision = refs.policy.querySelector('[data-testid="revision"]');
    expect(revision?.textContent).toBe("revision: 0");
    expect(refs.policy.textContent).toContain("attack_supply_threshold: 24");
  });

  it("shows the proposal card with live approve and reject buttons", () => {
    const refs = mountPanels();
    const view = reduce(runningView(), proposalMsg(sampleProposal(1, {
      deltas: { composition_weights: { Air: 3 } },
    }), 11));
    const onDecision = vi.fn();
    renderPanels(refs, view, { onDecision });

    const card = refs.proposal.querySelector('[data-testid="proposal-card"]');
    expect(card).not.toBeNull();
    expect(card?.textContent).toContain("basis: air_dominance");
    expect(card?.textContent).toContain("composition_weights");

    const approve = refs.proposal.querySelector('[data-testid="approve"]');
    const reject = refs.proposal.querySelector('[data-testid="reject"]');
    expect((approve as HTMLButtonElement).disabled).toBe(false);
    expect((reject as HTMLButtonElement).disabled).toBe(false);
    (approve as HTMLButtonElement).click();
    expect(onDecision).toHaveBeenCalledWith(1, "approve");
  });

  it("disables decision buttons while disconnected", () => {
    const refs = mountPanels();
    let view = reduce(runningView(), proposalMsg(sampleProposal(1), 11));
    view = connectionChanged(view, "closed");
    renderPanels(refs, view, noop);
    const approve = refs.proposal.querySelector('[data-testid="approve"]');
    expect((approve as HTMLButtonElement).disabled).toBe(true);
  });

  it("keeps the transcript in arrival order", () => {
    const refs = mountPanels();
    const view = reduce(runningView(), proposalMsg(sampleProposal(1), 11));
    renderPanels(refs, view, noop);
    const entries = [...refs.transcript.children].map((el) => el.className);
    expect(entries).toEqual(["entry instruction", "entry proposal"]);
    expect(refs.transcript.children[0]?.textContent)
      .toContain("you: sky army style");
  });

  it("marks spoken instructions in the transcript", () => {
    const refs = mountPanels();
    const view = reduce(runningView(),
                        chatIn(2, "attack now", 12, "transcript"));
    renderPanels(refs, view, noop);
    const last = refs.transcript.lastElementChild;
    expect(last?.textContent).toContain("\u{1F399}");
  });

  it("shows the outcome banner and hides it before the end", () => {
    const refs = mountPanels();
    const running = runningView();
    renderPanels(refs, running, noop);
    expect(refs.banner.hidden).toBe(true);

    const ended = reduce(running, episodeEndMsg(300, "win"));
    renderPanels(refs, ended, noop);
    expect(refs.banner.hidden).toBe(false);
    expect(refs.banner.textContent).toBe("Victory at tick 300");
    expect(refs.banner.dataset.outcome).toBe("win");
  });

  it("renders toasts for errors", () => {
    const refs = mountPanels();
    const view = reduce(runningView(), errorMsg("advisor timeout"));
    renderPanels(refs, view, noop);
    expect(refs.toasts.children).toHaveLength(1);
    expect(refs.toasts.textContent).toContain("advisor timeout");
  });
});
