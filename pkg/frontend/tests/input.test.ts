import { beforeEach, describe, expect, it } from "vitest";

import { MapInput } from "../src/input";
import { connectionChanged, initialView, reduce,
         type ViewModel } from "../src/view";
import type { ClientFrame } from "../src/wire";
import { episodeEndMsg, resetSeq, sampleState, stateUpdate } from "./helpers";

// 640px canvas over the 8x8 sample arena: one cell spans 80px. jsdom
// reports a zero-size bounding rect, so client coordinates map 1:1 onto
// canvas pixels. Cell (cx, cy) centers at (cx * 80 + 40, cy * 80 + 40).
const PX = 80;

function center(cx: number, cy: number): [number, number] {
  return [cx * PX + PX / 2, cy * PX + PX / 2];
}

interface Bench {
  input: MapInput;
  canvas: HTMLCanvasElement;
  sent: ClientFrame[];
  changes: number;
  setView(view: ViewModel): void;
  view(): ViewModel;
}

function runningView(): ViewModel {
  resetSeq();
  return reduce(connectionChanged(initialView(), "open"),
                stateUpdate({ tick: 0 }));
}

function bench(view: ViewModel = runningView()): Bench {
  const canvas = document.createElement("canvas");
  canvas.width = 640;
  canvas.height = 640;
  document.body.appendChild(canvas);

  const state = { view, sent: [] as ClientFrame[], changes: 0 };
  const input = new MapInput({
    canvas,
    getView: () => state.view,
    send: (frame) => { state.sent.push(frame); },
    onChange: () => { state.changes += 1; },
  });
  input.attach();
  return {
    input, canvas,
    get sent() { return state.sent; },
    get changes() { return state.changes; },
    setView: (v) => { state.view = v; },
    view: () => state.view,
  };
}

function mouse(canvas: HTMLCanvasElement, type: string,
               [x, y]: [number, number], button = 0): void {
  canvas.dispatchEvent(new MouseEvent(type, {
    button, clientX: x, clientY: y, bubbles: true, cancelable: true,
  }));
}

function click(canvas: HTMLCanvasElement, at: [number, number]): void {
  mouse(canvas, "mousedown", at);
  mouse(canvas, "mouseup", at);
}

function drag(canvas: HTMLCanvasElement, from: [number, number],
              to: [number, number]): void {
  mouse(canvas, "mousedown", from);
  mouse(canvas, "mouseup", to);
}

beforeEach(() => { document.body.innerHTML = ""; });

describe("selection", () => {
  it("click selects the own unit on that cell", () => {
    const b = bench();
    click(b.canvas, center(1, 2));
    expect([...b.input.selection]).toEqual([2]);
    expect(b.changes).toBe(1);
  });

  it("click on an empty cell clears the selection", () => {
    const b = bench();
    click(b.canvas, center(1, 2));
    click(b.canvas, center(0, 7));
    expect(b.input.selection.size).toBe(0);
  });

  it("enemy units are not selectable", () => {
    const b = bench();
    click(b.canvas, center(5, 5));
    expect(b.input.selection.size).toBe(0);
  });

  it("drag box selects the own units inside it", () => {
    const b = bench();
    drag(b.canvas, [60, 60], [250, 250]);
    expect([...b.input.selection].sort((a, z) => a - z)).toEqual([2, 3, 4]);
  });

  it("a box over the whole map still selects only own units", () => {
    const b = bench();
    drag(b.canvas, [2, 2], [638, 638]);
    expect([...b.input.selection].sort((a, z) => a - z))
      .toEqual([2, 3, 4, 5]);
  });
});

describe("orders", () => {
  it("drag-select three units and right-click sends one move frame", () => {
    const b = bench();
    drag(b.canvas, [60, 60], [250, 250]);
    mouse(b.canvas, "contextmenu", center(5, 4));
    expect(b.sent).toHaveLength(1);
    expect(b.sent[0]).toEqual({
      type: "manual_action",
      payload: {
        commands: [
          { type: "move", unit: 2, cell: [5, 4] },
          { type: "move", unit: 3, cell: [5, 4] },
          { type: "move", unit: 4, cell: [5, 4] },
        ],
      },
    });
  });

  it("right-click on an enemy unit cell sends attack orders", () => {
    const b = bench();
    click(b.canvas, center(3, 3));
    mouse(b.canvas, "contextmenu", center(5, 5));
    expect(b.sent[0]?.payload.commands).toEqual([
      { type: "attack", unit: 5, cell: [5, 5] },
    ]);
  });

  it("right-click on an enemy building cell also attacks", () => {
    const b = bench();
    click(b.canvas, center(3, 3));
    mouse(b.canvas, "contextmenu", center(6, 6));
    expect(b.sent[0]?.payload.commands).toEqual([
      { type: "attack", unit: 5, cell: [6, 6] },
    ]);
  });

  it("sends nothing while the selection is empty", () => {
    const b = bench();
    mouse(b.canvas, "contextmenu", center(5, 4));
    expect(b.sent).toHaveLength(0);
  });

  it("sends nothing after the episode ended", () => {
    const b = bench();
    click(b.canvas, center(1, 2));
    b.setView(reduce(b.view(), episodeEndMsg(300, "loss")));
    mouse(b.canvas, "contextmenu", center(5, 4));
    expect(b.sent).toHaveLength(0);
  });

  it("prunes units that died since selection", () => {
    const b = bench();
    drag(b.canvas, [60, 60], [250, 250]);
    const thinned = sampleState(9);
    const own = thinned.factions[0];
    if (!own) throw new Error("sample state lost its first faction");
    own.units = own.units.filter((u) => u.id !== 3);
    b.setView(reduce(b.view(), stateUpdate({ tick: 9, state: thinned })));
    mouse(b.canvas, "contextmenu", center(5, 4));
    expect(b.sent[0]?.payload.commands).toEqual([
      { type: "move", unit: 2, cell: [5, 4] },
      { type: "move", unit: 4, cell: [5, 4] },
    ]);
  });

  it("filters enemy ids even if they sneak into the selection", () => {
    const b = bench();
    click(b.canvas, center(1, 2));
    b.input.selection.add(12);
    mouse(b.canvas, "contextmenu", center(0, 7));
    expect(b.sent[0]?.payload.commands).toEqual([
      { type: "move", unit: 2, cell: [0, 7] },
    ]);
  });
});

describe("lifecycle", () => {
  it("detach removes every listener", () => {
    const b = bench();
    b.input.detach();
    click(b.canvas, center(1, 2));
    mouse(b.canvas, "contextmenu", center(5, 4));
    expect(b.input.selection.size).toBe(0);
    expect(b.sent).toHaveLength(0);
    expect(b.changes).toBe(0);
  });
});
