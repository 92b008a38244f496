// In-memory stand-in for the review service, mirroring its semantics:
// 404 for unknown ids, 409 on conflicting labels, idempotent re-labels,
// agreement computed over labeled items at the service threshold.

import { ConflictError, NotFoundError } from "../src/api.js";
import type { ReviewApi } from "../src/api.js";
import type { AgreementStats, FeatureContribution, ReviewItem, SortOrder } from "../src/types.js";

export function makeItem(
  id: string,
  score: number,
  features: FeatureContribution[] = [],
  text = `meme ${id}`,
): ReviewItem {
  return {
    id,
    augmented: {
      id,
      score,
      predicted_label: score >= 0.5 ? 1 : 0,
      top_features: features,
      engineered: { hate_word_count: 0 },
      caption: `caption for ${id}`,
    },
    img: `img/${id}.png`,
    text,
    status: "pending",
    human_label: null,
    labeled_at: null,
    annotator: null,
  };
}

export class FakeService implements ReviewApi {
  items: Map<string, ReviewItem>;
  threshold = 0.5;
  queueCalls: Array<{ threshold?: number; sort?: SortOrder }> = [];
  failNextSubmit = false;

  constructor(items: ReviewItem[]) {
    this.items = new Map(items.map((item) => [item.id, structuredClone(item)]));
  }

  async health() {
    return { status: "ok", version: "fake", memes: this.items.size };
  }

  async queue(threshold?: number, sort: SortOrder = "score"): Promise<ReviewItem[]> {
    this.queueCalls.push({ threshold, sort });
    const cutoff = threshold ?? this.threshold;
    const flagged = [...this.items.values()].filter((item) => item.augmented.score >= cutoff);
    if (sort === "id") {
      flagged.sort((a, b) => (a.id < b.id ? -1 : 1));
    } else {
      flagged.sort((a, b) => b.augmented.score - a.augmented.score || (a.id < b.id ? -1 : 1));
    }
    return structuredClone(flagged);
  }

  async meme(id: string): Promise<ReviewItem> {
    const item = this.items.get(id);
    if (!item) throw new NotFoundError(`unknown meme ${id}`);
    return structuredClone(item);
  }

  imageUrl(id: string): string {
    return `/api/memes/${id}/image`;
  }

  async submitLabel(id: string, label: 0 | 1, annotator?: string): Promise<ReviewItem> {
    if (this.failNextSubmit) {
      this.failNextSubmit = false;
      throw new Error("network unreachable");
    }
    const item = this.items.get(id);
    if (!item) throw new NotFoundError(`unknown meme ${id}`);
    if (item.status === "labeled") {
      if (item.human_label === label) return structuredClone(item);
      throw new ConflictError(`meme ${id} already labeled ${item.human_label}`);
    }
    item.status = "labeled";
    item.human_label = label;
    item.labeled_at = new Date().toISOString();
    item.annotator = annotator ?? null;
    return structuredClone(item);
  }

  async agreement(): Promise<AgreementStats> {
    const labeled = [...this.items.values()].filter((item) => item.status === "labeled");
    const confusion: Record<string, number> = {
      model_0_human_0: 0,
      model_0_human_1: 0,
      model_1_human_0: 0,
      model_1_human_1: 0,
    };
    for (const item of labeled) {
      const model = item.augmented.score >= this.threshold ? 1 : 0;
      confusion[`model_${model}_human_${item.human_label}`] += 1;
    }
    const n = labeled.length;
    const agree = confusion.model_0_human_0 + confusion.model_1_human_1;
    return {
      n_reviewed: n,
      agreement_rate: n ? agree / n : 0,
      human_positive_rate: n
        ? (confusion.model_0_human_1 + confusion.model_1_human_1) / n
        : 0,
      model_positive_rate: n
        ? (confusion.model_1_human_0 + confusion.model_1_human_1) / n
        : 0,
      confusion,
    };
  }
}

export function defaultItems(): ReviewItem[] {
  return [
    makeItem("003", 0.97, [
      { name: "hate_word_count", channel: "engineered", contribution: 2.4 },
      { name: "ent_morlocks_norp", channel: "named-entity", contribution: 0.8 },
      { name: "club", channel: "text-term", contribution: -0.2 },
    ]),
    makeItem("001", 0.91),
    makeItem("007", 0.74),
    makeItem("002", 0.63),
    makeItem("005", 0.31),
  ];
}
