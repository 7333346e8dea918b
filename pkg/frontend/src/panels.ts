// DOM panels rendered from the view model: status line, resources, policy
// dashboard, transcript, the actionable proposal card, and toasts.
// Everything is rebuilt from scratch per render; the DOM is small and user
// text only ever lands in textContent.

import { VIEWER_FACTION } from "./map";
import { canAct, type TranscriptEntry, type ViewModel } from "./view";

export interface PanelRefs {
  status: HTMLElement;
  frame: HTMLElement;
  resources: HTMLElement;
  policy: HTMLElement;
  proposal: HTMLElement;
  transcript: HTMLElement;
  banner: HTMLElement;
  toasts: HTMLElement;
}

export interface PanelHandlers {
  onDecision(proposalId: number, decision: "approve" | "reject"): void;
}

export function grabPanelRefs(doc: Document): PanelRefs {
  const grab = (id: string): HTMLElement => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing panel element #${id}`);
    return el;
  };
  return {
    status: grab("status"),
    frame: grab("frame-line"),
    resources: grab("resources"),
    policy: grab("policy"),
    proposal: grab("proposal"),
    transcript: grab("transcript"),
    banner: grab("banner"),
    toasts: grab("toasts"),
  };
}

function line(doc: Document, cls: string, text: string): HTMLElement {
  const el = doc.createElement("div");
  el.className = cls;
  el.textContent = text;
  return el;
}

function renderTranscriptEntry(doc: Document,
                               entry: TranscriptEntry): HTMLElement {
  switch (entry.kind) {
    case "instruction": {
      const prefix = entry.channel === "transcript" ? "\u{1F399} " : "";
      return line(doc, "entry instruction",
                  `[${entry.tick}] you: ${prefix}${entry.text}`);
    }
    case "proposal":
      return line(doc, "entry proposal",
                  `[${entry.tick}] advisor: ${entry.proposal.rationale} `
                  + `(basis ${entry.proposal.basis})`);
    case "decision":
      return line(doc, `entry decision ${entry.decision}`,
                  `[${entry.tick}] ${entry.decision} by ${entry.by} `
                  + `(revision ${entry.revisionAfter})`);
    case "note":
      return line(doc, "entry note", `[${entry.tick}] ${entry.message}`);
  }
}

function renderProposalCard(doc: Document, view: ViewModel,
                            handlers: PanelHandlers): HTMLElement {
  const card = doc.createElement("div");
  card.className = "card";
  card.dataset.testid = "proposal-card";
  const pending = view.pending;
  if (!pending) return card;

  card.appendChild(line(doc, "card-title", `proposal #${pending.id}`));
  card.appendChild(line(doc, "card-basis", `basis: ${pending.basis}`));
  card.appendChild(line(doc, "card-rationale", pending.rationale));
  const deltas = Object.entries(pending.deltas);
  if (deltas.length > 0) {
    const list = doc.createElement("ul");
    list.className = "card-deltas";
    for (const [key, value] of deltas) {
      const item = doc.createElement("li");
      item.textContent = `${key}: ${JSON.stringify(value)}`;
      list.appendChild(item);
    }
    card.appendChild(list);
  }

  const actions = doc.createElement("div");
  actions.className = "card-actions";
  for (const choice of ["approve", "reject"] as const) {
    const button = doc.createElement("button");
    button.type = "button";
    button.textContent = choice;
    button.className = choice;
    button.dataset.testid = choice;
    button.disabled = !canAct(view);
    button.addEventListener("click",
                            () => handlers.onDecision(pending.id, choice));
    actions.appendChild(button);
  }
  card.appendChild(actions);
  return card;
}

export function renderPanels(refs: PanelRefs, view: ViewModel,
                             handlers: PanelHandlers): void {
  const doc = refs.status.ownerDocument;

  const phase = view.phase ?? "connecting";
  refs.status.textContent =
    `${view.connection} | ${phase} | tick ${view.tick}`;
  refs.status.dataset.connection = view.connection;
  refs.frame.textContent = view.frameText ?? "";

  const me = view.state?.factions.find((f) => f.id === VIEWER_FACTION);
  refs.resources.textContent = me
    ? `minerals ${me.minerals}  gas ${me.gas}  `
      + `supply ${me.supply_used}/${me.supply_cap}`
    : "";

  refs.policy.replaceChildren();
  if (view.policy) {
    refs.policy.appendChild(
      line(doc, "policy-id", `policy: ${view.policy.policy_id}`));
    const revision = line(doc, "policy-revision",
                          `revision: ${view.policy.revision}`);
    revision.dataset.testid = "revision";
    refs.policy.appendChild(revision);
    for (const [key, value] of Object.entries(view.policy.modulators)) {
      refs.policy.appendChild(
        line(doc, "policy-knob", `${key}: ${JSON.stringify(value)}`));
    }
  }

  refs.proposal.replaceChildren();
  if (view.pending) {
    refs.proposal.appendChild(renderProposalCard(doc, view, handlers));
  }

  refs.transcript.replaceChildren();
  for (const entry of view.transcript) {
    refs.transcript.appendChild(renderTranscriptEntry(doc, entry));
  }
  refs.transcript.scrollTop = refs.transcript.scrollHeight;

  if (view.outcome) {
    refs.banner.hidden = false;
    const labels = { win: "Victory", loss: "Defeat", draw: "Draw" } as const;
    refs.banner.textContent =
      `${labels[view.outcome.outcome]} at tick ${view.outcome.tick}`;
    refs.banner.dataset.outcome = view.outcome.outcome;
  } else {
    refs.banner.hidden = true;
    refs.banner.textContent = "";
  }

  refs.toasts.replaceChildren();
  for (const toast of view.toasts) {
    refs.toasts.appendChild(line(doc, "toast", toast));
  }
}
