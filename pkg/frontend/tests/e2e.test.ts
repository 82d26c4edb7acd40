/**
 * End-to-end: a scripted browser session (jsdom) against the real backend.
 *
 * Spawns the Python API server, drives the mounted UI by dispatching DOM
 * clicks only, then inspects the server's append-only event log for the
 * legal order: pre-rating, at least one preview, exactly one selection, at
 * least one unlock, post-rating.
 */
import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, RequestFailed } from "../src/api.js";
import { SessionFlow } from "../src/flow.js";
import { mount } from "../src/views.js";

const PORT = 8911 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let dataDir: string;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/v1/analysis/report`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("backend did not come up");
}

function click(root: HTMLElement, testId: string): void {
  const node = root.querySelector(`[data-testid="${testId}"]`) as HTMLElement | null;
  if (!node) {
    throw new Error(`no element ${testId}; present: ${
      Array.from(root.querySelectorAll("[data-testid]"))
        .map((n) => n.getAttribute("data-testid"))
        .join(", ")
    }`);
  }
  node.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

async function settle(): Promise<void> {
  // let pending fetch handlers and re-renders flush
  for (let i = 0; i < 40; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

function eventLog(): Array<{ kind: string; payload: Record<string, unknown> }> {
  const raw = readFileSync(join(dataDir, "events.jsonl"), "utf-8");
  return raw
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "peersteps-e2e-"));
  server = spawn(
    "python3",
    ["-m", "peersteps.cli", "serve", "--port", String(PORT), "--data", dataDir],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 40_000);

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("scripted browser session", () => {
  let sessionId: string;
  let participantId: string;

  it("completes the full daily flow through DOM clicks only", async () => {
    const client = new ApiClient(BASE);
    const enrolled = await client.enroll("e2e-user", "female");
    participantId = enrolled.participant_id;
    const session = await client.startSession(participantId, "2024-05-01");
    sessionId = session.session_id;

    const root = document.createElement("div");
    document.body.appendChild(root);
    const flow = new SessionFlow(client, sessionId);
    mount(root, flow);

    // pre-rating: exactly five options, 1..5 only
    const likert = Array.from(root.querySelectorAll("[data-testid^=likert-pre-]"));
    expect(likert).toHaveLength(5);
    click(root, "likert-pre-3");
    await settle();
    expect(flow.state.stage).toBe("card_grid");
    expect(flow.state.cards).toHaveLength(4);

    // peek two cards (two preview events), back out of the first
    const [first, second] = flow.state.cards;
    click(root, `peek-${first!.card_id}`);
    await settle();
    click(root, "back-to-grid");
    await settle();
    click(root, `peek-${second!.card_id}`);
    await settle();
    expect(root.querySelector("[data-testid=selection-warning]")?.textContent).toContain(
      "only view one full user profile",
    );

    // confirm the selection, expand both detail sections, read, rate again
    click(root, "confirm-select");
    await settle();
    expect(flow.state.stage).toBe("overview");
    click(root, "section-steps");
    await settle();
    click(root, "section-interests");
    await settle();
    click(root, "to-full-profile");
    await settle();
    expect(root.querySelector("[data-testid=full-profile]")).toBeTruthy();
    click(root, "to-post-rating");
    await settle();
    click(root, "likert-post-4");
    await settle();
    expect(flow.state.stage).toBe("done");
    expect(root.querySelector("[data-testid=done]")).toBeTruthy();

    // ingest the day's steps so the session finalizes server-side
    await client.ingestSteps(participantId, "2024-05-01", 8400);

    // the server log holds the legal order for this session
    const kinds = eventLog()
      .filter((event) => event.payload["session_id"] === sessionId)
      .map((event) => event.kind);
    const order = ["pre_motivation", "preview", "selected", "unlock", "post_motivation"];
    let cursor = -1;
    for (const kind of order) {
      cursor = kinds.indexOf(kind, cursor + 1);
      expect(cursor, `${kind} missing or out of order in ${kinds.join(",")}`).toBeGreaterThan(-1);
    }
    expect(kinds.filter((k) => k === "preview").length).toBeGreaterThanOrEqual(1);
    expect(kinds.filter((k) => k === "selected")).toHaveLength(1);
    expect(kinds.filter((k) => k === "unlock").length).toBeGreaterThanOrEqual(1);
    expect(kinds[kinds.length - 1]).toBe("finalized");

    // previews must precede the selection, unlocks must follow it
    expect(kinds.indexOf("preview")).toBeLessThan(kinds.indexOf("selected"));
    expect(kinds.indexOf("unlock")).toBeGreaterThan(kinds.indexOf("selected"));
  }, 40_000);

  it("blocks a second selection attempt in the UI and on the server", async () => {
    const client = new ApiClient(BASE);
    const flow = new SessionFlow(client, sessionId);
    flow.state.stage = "card_grid";
    await flow.rehydrateCards();
    const other = flow.state.cards[0]!;

    // a direct second select is rejected by the server with a conflict
    await expect(client.select(sessionId, other.card_id)).rejects.toMatchObject({
      status: 409,
      code: "Sequencing",
    });

    // the log still holds exactly one selection
    const kinds = eventLog()
      .filter((event) => event.payload["session_id"] === sessionId)
      .map((event) => event.kind);
    expect(kinds.filter((k) => k === "selected")).toHaveLength(1);
  }, 20_000);

  it("enforces the 1..5 motivation scale end to end", async () => {
    const client = new ApiClient(BASE);
    const session = await client.startSession(participantId, "2024-05-02");

    // the server rejects out-of-scale values the UI cannot even produce
    let rejected: unknown;
    try {
      await client.preMotivation(session.session_id, 7);
    } catch (error) {
      rejected = error;
    }
    expect(rejected).toBeInstanceOf(RequestFailed);
    expect((rejected as RequestFailed).status).toBe(422);

    await client.preMotivation(session.session_id, 5);
  }, 20_000);

  it("rehydrates the same cards after a mid-session reload", async () => {
    const client = new ApiClient(BASE);
    const session = await client.startSession(participantId, "2024-05-03");
    await client.preMotivation(session.session_id, 2);
    const served = await client.getCards(session.session_id);

    const flow = new SessionFlow(client, session.session_id);
    await flow.resume();
    expect(flow.state.stage).toBe("card_grid");
    expect(flow.state.cards).toEqual(served.cards);
  }, 20_000);
});
