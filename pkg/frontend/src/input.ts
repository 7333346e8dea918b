// Mouse input on the map: left click / drag selects own units, right click
// orders the selection to move (or attack, when the target cell holds an
// enemy). Only the viewer's units are selectable and commands are
// re-validated against the latest snapshot before anything is sent.

import { cellSize, VIEWER_FACTION } from "./map";
import { canAct, type ViewModel } from "./view";
import { attackFrame, moveFrame,
         type Cell, type ClientFrame, type StateDoc } from "./wire";

export interface InputDeps {
  canvas: HTMLCanvasElement;
  getView(): ViewModel;
  send(frame: ClientFrame): void;
  onChange(): void;
}

const CLICK_SLOP_PX = 4;

function ownUnits(state: StateDoc) {
  return state.factions.find((f) => f.id === VIEWER_FACTION)?.units ?? [];
}

function enemyAt(state: StateDoc, cell: Cell): boolean {
  for (const faction of state.factions) {
    if (faction.id === VIEWER_FACTION) continue;
    if (faction.units.some(
          (u) => u.pos[0] === cell[0] && u.pos[1] === cell[1])) return true;
    if (faction.buildings.some(
          (b) => b.pos[0] === cell[0] && b.pos[1] === cell[1])) return true;
  }
  return false;
}

export class MapInput {
  readonly selection = new Set<number>();
  private dragStart: [number, number] | null = null;
  private readonly unbinders: (() => void)[] = [];

  constructor(private readonly deps: InputDeps) {}

  attach(): void {
    const { canvas } = this.deps;
    const bind = <K extends keyof HTMLElementEventMap>(
        name: K, handler: (event: HTMLElementEventMap[K]) => void) => {
      canvas.addEventListener(name, handler);
      this.unbinders.push(() => canvas.removeEventListener(name, handler));
    };
    bind("mousedown", (e) => this.onMouseDown(e));
    bind("mouseup", (e) => this.onMouseUp(e));
    bind("contextmenu", (e) => this.onContextMenu(e));
  }

  detach(): void {
    while (this.unbinders.length > 0) this.unbinders.pop()?.();
  }

  private toCanvasPx(event: MouseEvent): [number, number] {
    const { canvas } = this.deps;
    const rect = canvas.getBoundingClientRect();
    const scale = rect.width > 0 ? canvas.width / rect.width : 1;
    return [(event.clientX - rect.left) * scale,
            (event.clientY - rect.top) * scale];
  }

  private toCell(px: [number, number], state: StateDoc): Cell {
    const size = cellSize(this.deps.canvas, state);
    const clamp = (v: number, hi: number) =>
      Math.max(0, Math.min(hi - 1, Math.floor(v / size)));
    return [clamp(px[0], state.width), clamp(px[1], state.height)];
  }

  private onMouseDown(event: MouseEvent): void {
    if (event.button !== 0) return;
    this.dragStart = this.toCanvasPx(event);
  }

  private onMouseUp(event: MouseEvent): void {
    if (event.button !== 0 || !this.dragStart) return;
    const start = this.dragStart;
    this.dragStart = null;
    const state = this.deps.getView().state;
    if (!state) return;

    const end = this.toCanvasPx(event);
    const width = Math.abs(end[0] - start[0]);
    const height = Math.abs(end[1] - start[1]);
    this.selection.clear();

    if (width < CLICK_SLOP_PX && height < CLICK_SLOP_PX) {
      const cell = this.toCell(end, state);
      const hit = ownUnits(state).find(
        (u) => u.pos[0] === cell[0] && u.pos[1] === cell[1]);
      if (hit) this.selection.add(hit.id);
    } else {
      const size = cellSize(this.deps.canvas, state);
      const left = Math.min(start[0], end[0]);
      const right = Math.max(start[0], end[0]);
      const top = Math.min(start[1], end[1]);
      const bottom = Math.max(start[1], end[1]);
      for (const unit of ownUnits(state)) {
        const cx = (unit.pos[0] + 0.5) * size;
        const cy = (unit.pos[1] + 0.5) * size;
        if (cx >= left && cx <= right && cy >= top && cy <= bottom) {
          this.selection.add(unit.id);
        }
      }
    }
    this.deps.onChange();
  }

  private onContextMenu(event: MouseEvent): void {
    event.preventDefault();
    const view = this.deps.getView();
    const state = view.state;
    if (!state || !canAct(view) || this.selection.size === 0) return;

    // Prune ids that no longer belong to a living own unit.
    const alive = new Set(ownUnits(state).map((u) => u.id));
    const ids = [...this.selection].filter((id) => alive.has(id)).sort(
      (a, b) => a - b);
    if (ids.length === 0) return;

    const cell = this.toCell(this.toCanvasPx(event), state);
    const frame = enemyAt(state, cell) ? attackFrame(ids, cell)
                                       : moveFrame(ids, cell);
    this.deps.send(frame);
  }
}
