// Browser bootstrap: wires the controller to the DOM. All logic worth
// testing lives in state.ts / render.ts / format.ts / keyboard.ts.

import { ApiClient } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { renderAgreementPanel, renderDetail, renderQueue } from "./render.js";
import { ReviewController } from "./state.js";

function requireElement(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

export function startApp(baseUrl: string = ""): ReviewController {
  const client = new ApiClient(baseUrl);
  const controller = new ReviewController(client);

  const queueEl = requireElement("queue-panel");
  const detailEl = requireElement("detail-panel");
  const agreementEl = requireElement("agreement-panel");
  const thresholdEl = requireElement("threshold") as HTMLInputElement;
  const thresholdValueEl = requireElement("threshold-value");
  const sortEl = requireElement("sort-toggle") as HTMLButtonElement;

  controller.onChange((state) => {
    queueEl.innerHTML = renderQueue(state);
    const item = controller.selectedItem();
    detailEl.innerHTML = renderDetail(item, state, item ? client.imageUrl(item.id) : "");
    agreementEl.innerHTML = renderAgreementPanel(state.agreement);
    thresholdValueEl.textContent = state.threshold.toFixed(2);
    sortEl.textContent = `sort: ${state.sort}`;
  });

  queueEl.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest<HTMLElement>(".queue-row");
    if (row?.dataset.id) controller.select(row.dataset.id);
  });

  detailEl.addEventListener("click", (event) => {
    const action = (event.target as HTMLElement).dataset.action;
    if (action === "label-hateful") void controller.submitDecision(1);
    else if (action === "label-benign") void controller.submitDecision(0);
    else if (action === "skip") controller.skip();
    else if (action === "reveal") controller.revealImages();
    else if (action === "retry-submit") void controller.refreshQueue();
  });

  thresholdEl.addEventListener("change", () => {
    void controller.setThreshold(Number(thresholdEl.value));
  });

  sortEl.addEventListener("click", () => {
    void controller.setSort(controller.state.sort === "score" ? "id" : "score");
  });

  document.addEventListener("keydown", (event) => {
    if ((event.target as HTMLElement).tagName === "INPUT") return;
    const action = actionForKey(event.key);
    if (!action) return;
    event.preventDefault();
    if (action.kind === "label") void controller.submitDecision(action.label);
    else if (action.kind === "skip") controller.skip();
    else controller.revealImages();
  });

  void controller.refreshQueue().then(() => controller.refreshAgreement());
  return controller;
}

declare global {
  interface Window {
    memetriage?: ReviewController;
  }
}

if (typeof document !== "undefined" && document.getElementById("queue-panel")) {
  window.memetriage = startApp();
}
