// Pure HTML-string renderers: no DOM access, fully unit-testable.

import { chipViews, formatAgreement, formatScorePercent, labelWord } from "./format.js";
import type { AppState } from "./state.js";
import type { AgreementStats, ReviewItem } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderQueue(state: AppState): string {
  if (state.items.length === 0) {
    return '<p class="empty">queue is empty at this threshold</p>';
  }
  const rows = state.items.map((item) => {
    const classes = ["queue-row"];
    if (item.id === state.selectedId) classes.push("selected");
    if (item.status === "labeled") classes.push("labeled");
    const human =
      item.status === "labeled" ? ` &middot; human: ${labelWord(item.human_label)}` : "";
    return (
      `<li class="${classes.join(" ")}" data-id="${escapeHtml(item.id)}">` +
      `<span class="queue-id">${escapeHtml(item.id)}</span>` +
      `<span class="queue-score">${formatScorePercent(item.augmented.score)}</span>` +
      `<span class="queue-status">${item.status}${human}</span>` +
      `</li>`
    );
  });
  return `<ol class="queue">${rows.join("")}</ol>`;
}

export function renderImagePanel(item: ReviewItem, state: AppState, imageUrl: string): string {
  if (!state.imagesRevealed) {
    return (
      '<div class="content-warning" data-role="content-warning">' +
      "<p>This queue contains potentially hateful imagery.</p>" +
      '<button data-action="reveal">Show images (r)</button>' +
      "</div>"
    );
  }
  return (
    `<img class="meme-image" src="${escapeHtml(imageUrl)}" alt="meme ${escapeHtml(item.id)}" ` +
    'onerror="this.closest(\'[data-role=image-panel]\').dataset.failed=\'1\'">' +
    '<button class="retry hidden" data-action="retry-image">Retry image</button>'
  );
}

export function renderDetail(item: ReviewItem | null, state: AppState, imageUrl: string): string {
  if (item === null) {
    return '<p class="empty">nothing selected</p>';
  }
  const augmented = item.augmented;
  const chips = chipViews(augmented.top_features);
  const chipHtml =
    chips.length === 0
      ? '<p class="no-features">no salient features</p>'
      : `<ul class="chips">${chips
          .map(
            (chip) =>
              `<li class="chip channel-${chip.channel}${chip.pushesHateful ? " pushes-hateful" : ""}">` +
              `<span class="badge">${chip.badge}</span>` +
              `<span class="chip-name">${escapeHtml(chip.name)}</span>` +
              `<span class="chip-value">${chip.signed}</span>` +
              `</li>`,
          )
          .join("")}</ul>`;

  const conflict = state.conflict && state.conflict.id === item.id ? state.conflict : null;
  const readOnly = item.status === "labeled" || conflict !== null;
  const storedLabel = conflict !== null ? conflict.storedLabel : item.human_label;
  const decision = readOnly
    ? `<p class="stored-label" data-role="stored-label">stored label: ` +
      `<strong>${labelWord(storedLabel)}</strong>${conflict ? " (labeled by another moderator)" : ""}</p>` +
      '<div class="decision disabled">' +
      '<button disabled data-action="label-hateful">hateful (h)</button>' +
      '<button disabled data-action="label-benign">benign (b)</button>' +
      "</div>"
    : '<div class="decision">' +
      '<button data-action="label-hateful">hateful (h)</button>' +
      '<button data-action="label-benign">benign (b)</button>' +
      '<button data-action="skip">skip (s)</button>' +
      "</div>";

  const retry = state.networkError
    ? `<p class="network-error">${escapeHtml(state.networkError)} ` +
      '<button data-action="retry-submit">retry</button></p>'
    : "";

  return (
    `<article class="detail" data-id="${escapeHtml(item.id)}">` +
    `<div data-role="image-panel">${renderImagePanel(item, state, imageUrl)}</div>` +
    `<p class="overlay-text">${escapeHtml(item.text)}</p>` +
    `<p class="caption">caption: ${escapeHtml(augmented.caption)}</p>` +
    `<p class="score">model score: <strong>${formatScorePercent(augmented.score)}</strong> ` +
    `(predicted ${labelWord(augmented.predicted_label)})</p>` +
    chipHtml +
    decision +
    retry +
    "</article>"
  );
}

export function renderAgreementPanel(stats: AgreementStats | null): string {
  if (stats === null) {
    return '<p class="agreement" data-role="agreement">agreement: loading</p>';
  }
  return (
    `<p class="agreement" data-role="agreement" data-rate="${stats.n_reviewed === 0 ? "" : stats.agreement_rate}">` +
    `${formatAgreement(stats)}</p>`
  );
}
