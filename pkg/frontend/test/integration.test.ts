// Contract tests against a real, seeded review service: the Python CLI
// generates a synthetic corpus, trains the boosted trees, and serves it;
// the client is then driven exactly as the browser would drive it.

import { spawn, spawnSync } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { actionForKey } from "../src/keyboard.js";
import { renderAgreementPanel, renderDetail, renderQueue } from "../src/render.js";
import { ReviewController } from "../src/state.js";

const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 8900 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;

function runCli(args: string[]): void {
  const result = spawnSync(PYTHON, ["-m", "memetriage.cli", ...args], {
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(`cli ${args[0]} failed (${result.status}): ${result.stderr}`);
  }
}

async function waitForHealth(timeoutMs = 60000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "memetriage-it-"));
  const data = join(workDir, "data");
  const model = join(workDir, "gbdt.json");
  runCli(["gen-synthetic", "--out", data, "--n", "80", "--seed", "3"]);
  runCli([
    "train", "--model", "gbdt",
    "--memes", join(data, "memes.jsonl"),
    "--annotations", join(data, "annotations.jsonl"),
    "--out", model, "--seed", "3",
    "--n-estimators", "25", "--max-depth", "6",
  ]);
  server = spawn(
    PYTHON,
    [
      "-m", "memetriage.cli", "serve",
      "--memes", join(data, "memes.jsonl"),
      "--annotations", join(data, "annotations.jsonl"),
      "--model-file", model,
      "--label-log", join(workDir, "labels.jsonl"),
      "--port", String(PORT),
    ],
    { stdio: "ignore" },
  );
  await waitForHealth();
});

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(workDir, { recursive: true, force: true });
});

describe("seeded service contract", () => {
  it("renders the queue in exactly the server's order", async () => {
    const controller = new ReviewController(new ApiClient(BASE), 0.0);
    await controller.refreshQueue();
    const direct = (await (await fetch(`${BASE}/api/queue?threshold=0&sort=score`)).json()) as Array<{
      id: string;
    }>;
    expect(controller.state.items.length).toBe(direct.length);
    expect(controller.state.items.length).toBeGreaterThan(10);
    const html = renderQueue(controller.state);
    const rendered = [...html.matchAll(/data-id="([^"]+)"/g)].map((m) => m[1]);
    expect(rendered).toEqual(direct.map((item) => item.id));
  });

  it("runs a 5-meme keyboard session and matches the agreement endpoint exactly", async () => {
    const controller = new ReviewController(new ApiClient(BASE), 0.0);
    await controller.refreshQueue();
    // h, b, h, h, b through the real keyboard mapping
    for (const key of ["h", "b", "h", "h", "b"]) {
      const action = actionForKey(key);
      expect(action?.kind).toBe("label");
      if (action?.kind === "label") {
        await controller.submitDecision(action.label);
      }
    }
    const direct = (await (await fetch(`${BASE}/api/stats/agreement`)).json()) as Record<
      string,
      unknown
    >;
    expect(direct.n_reviewed).toBe(5);
    expect(controller.state.agreement).toEqual(direct);
    const html = renderAgreementPanel(controller.state.agreement);
    const rate = direct.agreement_rate as number;
    expect(html).toContain(`${(rate * 100).toFixed(1)}% agreement over 5 reviewed`);
    expect(html).toContain(`data-rate="${rate}"`);
  });

  it("renders a 409 conflict as the stored label, read-only", async () => {
    const controller = new ReviewController(new ApiClient(BASE), 0.0);
    await controller.refreshQueue();
    const pending = controller.pendingItems();
    expect(pending.length).toBeGreaterThan(0);
    const target = pending[0];
    controller.select(target.id);
    // another moderator labels it behind our back
    const race = await fetch(`${BASE}/api/memes/${target.id}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ label: 1, annotator: "other" }),
    });
    expect(race.status).toBe(200);
    // our stale submit of the opposite label must surface the stored one
    await controller.submitDecision(0);
    expect(controller.state.conflict).toEqual({ id: target.id, storedLabel: 1 });
    const item = controller.selectedItem();
    expect(item?.human_label).toBe(1);
    const html = renderDetail(item, controller.state, "");
    expect(html).toContain("stored label");
    expect(html).toContain("hateful");
    expect(html).toContain("disabled");
    expect(html).not.toContain('data-action="skip"');
  });

  it("serves the meme image bytes through the passthrough endpoint", async () => {
    const controller = new ReviewController(new ApiClient(BASE), 0.0);
    await controller.refreshQueue();
    const url = new ApiClient(BASE).imageUrl(controller.state.items[0].id);
    const response = await fetch(url);
    expect(response.status).toBe(200);
    const bytes = new Uint8Array(await response.arrayBuffer());
    // PNG signature
    expect([...bytes.slice(0, 4)]).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });
});
