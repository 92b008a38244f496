import { beforeEach, describe, expect, it } from "vitest";

import { ReviewController } from "../src/state.js";
import { FakeService, defaultItems, makeItem } from "./fake.js";

let service: FakeService;
let controller: ReviewController;

beforeEach(async () => {
  service = new FakeService(defaultItems());
  controller = new ReviewController(service, 0.5);
  await controller.refreshQueue();
});

describe("queue state", () => {
  it("preserves server order exactly", () => {
    expect(controller.state.items.map((i) => i.id)).toEqual(["003", "001", "007", "002"]);
  });

  it("selects the first pending item initially", () => {
    expect(controller.state.selectedId).toBe("003");
  });

  it("threshold changes re-fetch rather than filtering locally", async () => {
    await controller.setThreshold(0.9);
    expect(service.queueCalls.at(-1)).toEqual({ threshold: 0.9, sort: "score" });
    expect(controller.state.items.map((i) => i.id)).toEqual(["003", "001"]);
  });

  it("sort toggle re-fetches with the new order", async () => {
    await controller.setSort("id");
    expect(service.queueCalls.at(-1)).toEqual({ threshold: 0.5, sort: "id" });
    expect(controller.state.items.map((i) => i.id)).toEqual(["001", "002", "003", "007"]);
  });

  it("never reorders what the server sent", async () => {
    // a server that interleaves scores arbitrarily must be displayed as-is
    service.queue = async () => [makeItem("b", 0.2), makeItem("a", 0.9)];
    await controller.refreshQueue();
    expect(controller.state.items.map((i) => i.id)).toEqual(["b", "a"]);
  });
});

describe("labeling flow", () => {
  it("marks the item, advances to next pending, refreshes agreement", async () => {
    await controller.submitDecision(1);
    const labeled = controller.state.items.find((i) => i.id === "003");
    expect(labeled?.status).toBe("labeled");
    expect(labeled?.human_label).toBe(1);
    expect(controller.state.selectedId).toBe("001");
    expect(controller.state.agreement?.n_reviewed).toBe(1);
  });

  it("skip advances without labeling", () => {
    controller.skip();
    expect(controller.state.selectedId).toBe("001");
    expect(controller.state.items.every((i) => i.status === "pending")).toBe(true);
  });

  it("wraps advancement to the first pending item", async () => {
    controller.select("002"); // last queue row
    await controller.submitDecision(0);
    expect(controller.state.selectedId).toBe("003");
  });

  it("conflict shows the stored label read-only", async () => {
    await service.submitLabel("003", 0, "other-moderator"); // server-side race
    await controller.submitDecision(1);
    expect(controller.state.conflict).toEqual({ id: "003", storedLabel: 0 });
    const item = controller.state.items.find((i) => i.id === "003");
    expect(item?.status).toBe("labeled");
    expect(item?.human_label).toBe(0);
  });

  it("network failure keeps state unchanged and records the error", async () => {
    service.failNextSubmit = true;
    await controller.submitDecision(1);
    const item = controller.state.items.find((i) => i.id === "003");
    expect(item?.status).toBe("pending");
    expect(controller.state.selectedId).toBe("003");
    expect(controller.state.networkError).toContain("network unreachable");
    // retry succeeds
    await controller.submitDecision(1);
    expect(controller.state.items.find((i) => i.id === "003")?.status).toBe("labeled");
    expect(controller.state.networkError).toBeNull();
  });

  it("ignores decisions when the selected item is already labeled", async () => {
    await controller.submitDecision(1);
    controller.select("003");
    await controller.submitDecision(0); // no-op: already labeled
    expect(controller.state.items.find((i) => i.id === "003")?.human_label).toBe(1);
    expect(controller.state.conflict).toBeNull();
  });
});

describe("agreement panel data", () => {
  it("matches the service arithmetic after a scripted session", async () => {
    await controller.submitDecision(1); // 003: model 1, human 1 -> agree
    await controller.submitDecision(0); // 001: model 1, human 0 -> disagree
    await controller.submitDecision(1); // 007: model 1, human 1 -> agree
    await controller.submitDecision(1); // 002: model 1, human 1 -> agree
    const direct = await service.agreement();
    expect(controller.state.agreement).toEqual(direct);
    expect(direct.n_reviewed).toBe(4);
    expect(direct.agreement_rate).toBeCloseTo(0.75, 12);
  });
});

describe("content warning", () => {
  it("images start hidden and reveal explicitly", () => {
    expect(controller.state.imagesRevealed).toBe(false);
    controller.revealImages();
    expect(controller.state.imagesRevealed).toBe(true);
  });
});
