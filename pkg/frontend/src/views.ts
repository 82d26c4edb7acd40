/**
 * DOM rendering for the daily session flow.
 *
 * Neutral by design: cards appear exactly in server order, nothing is
 * ranked, and no copy praises higher step counts. The motivation scale
 * renders exactly five options, 1 (very low) to 5 (very high).
 */
import { CardSummary, FullCard } from "./api.js";
import { FlowError, SECTIONS, SELECTION_WARNING, SessionFlow, SessionViewState } from "./flow.js";

const LIKERT_LABELS: Record<number, string> = {
  1: "very low",
  2: "low",
  3: "neutral",
  4: "high",
  5: "very high",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/** Run a flow action from a handler; flow errors become on-page notices. */
function guard(flow: SessionFlow, action: () => Promise<void> | void): void {
  Promise.resolve()
    .then(action)
    .catch((error) => {
      if (error instanceof FlowError) {
        flow.state.notices.push(error.message);
      }
      // RequestFailed notices are appended by the flow itself.
    });
}

function likertScale(kind: "pre" | "post", flow: SessionFlow): HTMLElement {
  const wrap = el("div", { class: "likert", "data-testid": `likert-${kind}` });
  wrap.appendChild(
    el("p", {}, "How motivated are you to exercise right now? (1 = very low, 5 = very high)"),
  );
  for (let value = 1; value <= 5; value += 1) {
    const button = el(
      "button",
      { type: "button", "data-testid": `likert-${kind}-${value}` },
      `${value} – ${LIKERT_LABELS[value]}`,
    );
    button.onclick = () =>
      guard(flow, () =>
        kind === "pre" ? flow.submitPreMotivation(value) : flow.submitPostMotivation(value),
      );
    wrap.appendChild(button);
  }
  return wrap;
}

function cardRow(card: CardSummary, flow: SessionFlow): HTMLElement {
  const row = el("li", { class: "card", "data-testid": `card-${card.card_id}` });
  const button = el(
    "button",
    { type: "button", "data-testid": `peek-${card.card_id}` },
    `${card.display_name} — ${card.displayed_steps} steps yesterday`,
  );
  button.onclick = () => guard(flow, () => flow.peekCard(card.card_id));
  row.appendChild(button);
  return row;
}

function cardGrid(state: SessionViewState, flow: SessionFlow): HTMLElement {
  const panel = el("section", { "data-testid": "card-grid" });
  if (state.referenceSteps !== null) {
    panel.appendChild(
      el("p", { "data-testid": "own-steps" }, `Your steps yesterday: ${state.referenceSteps}`),
    );
  }
  panel.appendChild(el("p", {}, "Today's profiles — pick one to look at more closely:"));
  const list = el("ul", { class: "cards" });
  for (const card of state.cards) {
    list.appendChild(cardRow(card, flow));
  }
  panel.appendChild(list);

  if (state.peekedCardId !== null) {
    const card = state.cards.find((c) => c.card_id === state.peekedCardId);
    if (card) {
      const peek = el("div", { "data-testid": "peek-panel" });
      peek.appendChild(el("h3", {}, card.display_name));
      peek.appendChild(el("p", {}, `${card.displayed_steps} steps yesterday`));
      peek.appendChild(el("p", { class: "warning", "data-testid": "selection-warning" }, SELECTION_WARNING));
      const confirm = el(
        "button",
        { type: "button", "data-testid": "confirm-select" },
        "View this full profile",
      );
      confirm.onclick = () => guard(flow, () => flow.confirmSelection());
      const back = el("button", { type: "button", "data-testid": "back-to-grid" }, "Back");
      back.onclick = () => guard(flow, () => flow.backToGrid());
      peek.appendChild(confirm);
      peek.appendChild(back);
      panel.appendChild(peek);
    }
  }
  return panel;
}

function stepsSection(card: FullCard): HTMLElement {
  const body = el("dl", { "data-testid": "section-steps-body" });
  const rows: Array<[string, string]> = [
    ["Steps yesterday", String(card.displayed_steps)],
    ["Average distance", `${card.attributes.average_distance_km} km`],
    ["Gym time", `${card.attributes.gym_time_minutes} min/week`],
    ["Usual spot", card.attributes.exercise_location],
    ["Favorite spot", card.attributes.favorite_spot],
  ];
  for (const [label, value] of rows) {
    body.appendChild(el("dt", {}, label));
    body.appendChild(el("dd", {}, value));
  }
  return body;
}

function interestsSection(card: FullCard): HTMLElement {
  const body = el("dl", { "data-testid": "section-interests-body" });
  body.appendChild(el("dt", {}, "Preferred activities"));
  body.appendChild(el("dd", {}, card.attributes.preferred_activities.join(", ")));
  body.appendChild(el("dt", {}, "Hobbies"));
  body.appendChild(el("dd", {}, card.attributes.hobbies.join(", ")));
  return body;
}

function overview(state: SessionViewState, flow: SessionFlow): HTMLElement {
  const card = state.selected;
  const panel = el("section", { "data-testid": "overview" });
  if (!card) {
    return panel;
  }
  panel.appendChild(el("h2", {}, card.display_name));
  panel.appendChild(el("p", {}, `${card.displayed_steps} steps yesterday`));
  // Fixed order: Steps above Interests.
  for (const section of SECTIONS) {
    const expanded = state.expandedSections.includes(section);
    const header = el(
      "button",
      { type: "button", "data-testid": `section-${section}`, "aria-expanded": String(expanded) },
      `${section === "steps" ? "Steps" : "Interests"} ${expanded ? "▾" : "▸"}`,
    );
    header.onclick = () =>
      guard(flow, () =>
        expanded ? flow.collapseSection(section) : flow.expandSection(section),
      );
    panel.appendChild(header);
    if (expanded) {
      panel.appendChild(section === "steps" ? stepsSection(card) : interestsSection(card));
    }
  }
  const more = el("button", { type: "button", "data-testid": "to-full-profile" }, "Full profile");
  more.onclick = () => guard(flow, () => flow.showFullProfile());
  panel.appendChild(more);
  return panel;
}

function fullProfile(state: SessionViewState, flow: SessionFlow): HTMLElement {
  const card = state.selected;
  const panel = el("section", { "data-testid": "full-profile" });
  if (!card) {
    return panel;
  }
  const a = card.attributes;
  panel.appendChild(el("h2", {}, card.display_name));
  const facts = el("dl", {});
  const rows: Array<[string, string]> = [
    ["Steps yesterday", String(card.displayed_steps)],
    ["Age", String(a.age)],
    ["Sex", a.sex],
    ["Profession", a.profession],
    ["Height", `${a.height_cm} cm`],
    ["Weight", `${a.weight_kg} kg`],
    ["Gym time", `${a.gym_time_minutes} min/week`],
    ["Preferred activities", a.preferred_activities.join(", ")],
    ["Hobbies", a.hobbies.join(", ")],
    ["Exercise location", a.exercise_location],
    ["Favorite spot", a.favorite_spot],
    ["Average distance", `${a.average_distance_km} km`],
  ];
  for (const [label, value] of rows) {
    facts.appendChild(el("dt", {}, label));
    facts.appendChild(el("dd", {}, value));
  }
  panel.appendChild(facts);
  const done = el("button", { type: "button", "data-testid": "to-post-rating" }, "Continue");
  done.onclick = () => guard(flow, () => flow.finishReading());
  panel.appendChild(done);
  return panel;
}

export function render(root: HTMLElement, state: SessionViewState, flow: SessionFlow): void {
  root.replaceChildren();
  const notices = el("div", { "data-testid": "notices" });
  for (const message of state.notices) {
    notices.appendChild(el("p", { class: "notice" }, message));
  }
  root.appendChild(notices);

  switch (state.stage) {
    case "pre_motivation":
      root.appendChild(likertScale("pre", flow));
      break;
    case "card_grid":
      root.appendChild(cardGrid(state, flow));
      break;
    case "overview":
      root.appendChild(overview(state, flow));
      break;
    case "full_profile":
      root.appendChild(fullProfile(state, flow));
      break;
    case "post_motivation":
      root.appendChild(likertScale("post", flow));
      break;
    case "done":
      root.appendChild(
        el("p", { "data-testid": "done" }, "That's it for today — see you tomorrow."),
      );
      break;
  }
}

export function mount(root: HTMLElement, flow: SessionFlow): void {
  flow.onChange((state) => render(root, state, flow));
  render(root, flow.state, flow);
}
