// Canvas renderer for the grid map. Pure projection of the latest state
// snapshot plus the local selection; tolerates a missing 2d context so the
// app still runs where canvas is unavailable.

import type { StateDoc } from "./wire";

export const VIEWER_FACTION = 0;

const BACKGROUND = "#10141c";
const GRID_LINE = "#1d2430";
const FACTION_COLORS = ["#4da3ff", "#ff5d5d"];
const NODE_COLORS: Record<string, string> = {
  mineral: "#49d18a",
  gas: "#b98aff",
};
const SELECTION = "#ffd84d";

const BUILDING_GLYPHS: Record<string, string> = {
  Base: "B",
  SupplyDepot: "D",
  Barracks: "R",
  Factory: "F",
  Airport: "A",
  Turret: "T",
};

export function cellSize(canvas: HTMLCanvasElement, state: StateDoc): number {
  return canvas.width / state.width;
}

export function drawMap(canvas: HTMLCanvasElement, state: StateDoc | null,
                        selection: ReadonlySet<number>): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;

  ctx.fillStyle = BACKGROUND;
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!state) return;

  const cell = cellSize(canvas, state);

  ctx.strokeStyle = GRID_LINE;
  ctx.lineWidth = 1;
  ctx.beginPath();
  for (let x = 1; x < state.width; x++) {
    ctx.moveTo(x * cell, 0);
    ctx.lineTo(x * cell, state.height * cell);
  }
  for (let y = 1; y < state.height; y++) {
    ctx.moveTo(0, y * cell);
    ctx.lineTo(state.width * cell, y * cell);
  }
  ctx.stroke();

  for (const node of state.nodes) {
    if (node.amount_milli <= 0) continue;
    const [nx, ny] = node.pos;
    const cx = (nx + 0.5) * cell;
    const cy = (ny + 0.5) * cell;
    const r = cell * 0.3;
    ctx.fillStyle = NODE_COLORS[node.kind] ?? "#888";
    ctx.beginPath();
    ctx.moveTo(cx, cy - r);
    ctx.lineTo(cx + r, cy);
    ctx.lineTo(cx, cy + r);
    ctx.lineTo(cx - r, cy);
    ctx.closePath();
    ctx.fill();
  }

  ctx.textAlign = "center";
  ctx.textBaseline = "middle";

  for (const faction of state.factions) {
    const color = FACTION_COLORS[faction.id] ?? "#aaa";
    for (const building of faction.buildings) {
      const [bx, by] = building.pos;
      ctx.fillStyle = color;
      ctx.globalAlpha = 0.35;
      ctx.fillRect(bx * cell + 1, by * cell + 1, cell - 2, cell - 2);
      ctx.globalAlpha = 1;
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.strokeRect(bx * cell + 1, by * cell + 1, cell - 2, cell - 2);
      ctx.fillStyle = color;
      ctx.font = `${Math.round(cell * 0.55)}px system-ui, sans-serif`;
      ctx.fillText(BUILDING_GLYPHS[building.kind] ?? "?",
                   (bx + 0.5) * cell, (by + 0.5) * cell);
    }
  }

  for (const faction of state.factions) {
    const color = FACTION_COLORS[faction.id] ?? "#aaa";
    for (const unit of faction.units) {
      const [ux, uy] = unit.pos;
      const cx = (ux + 0.5) * cell;
      const cy = (uy + 0.5) * cell;
      ctx.fillStyle = color;
      if (unit.kind === "Air") {
        const r = cell * 0.32;
        ctx.beginPath();
        ctx.moveTo(cx, cy - r);
        ctx.lineTo(cx + r, cy + r);
        ctx.lineTo(cx - r, cy + r);
        ctx.closePath();
        ctx.fill();
      } else {
        const r = unit.kind === "Worker" ? cell * 0.18 : cell * 0.27;
        ctx.beginPath();
        ctx.arc(cx, cy, r, 0, Math.PI * 2);
        ctx.fill();
        if (unit.kind === "Ranged") {
          ctx.fillStyle = BACKGROUND;
          ctx.beginPath();
          ctx.arc(cx, cy, r * 0.35, 0, Math.PI * 2);
          ctx.fill();
        }
      }
      if (faction.id === VIEWER_FACTION && selection.has(unit.id)) {
        ctx.strokeStyle = SELECTION;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(cx, cy, cell * 0.42, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
  }
}
