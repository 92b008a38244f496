import { ConflictError } from "./api.js";
import type { ReviewApi } from "./api.js";
import type { AgreementStats, ReviewItem, SortOrder } from "./types.js";

export interface ConflictView {
  id: string;
  storedLabel: number | null;
}

// All persistence is server-side: this state is rebuildable from the API
// at any time, so moderator sessions can resume from any machine.
export interface AppState {
  items: ReviewItem[]; // exactly the server's order, never re-sorted locally
  threshold: number;
  sort: SortOrder;
  selectedId: string | null;
  imagesRevealed: boolean; // content warning gate, off by default
  agreement: AgreementStats | null;
  conflict: ConflictView | null;
  networkError: string | null;
  annotator: string | null;
}

export function initialState(threshold = 0.5): AppState {
  return {
    items: [],
    threshold,
    sort: "score",
    selectedId: null,
    imagesRevealed: false,
    agreement: null,
    conflict: null,
    networkError: null,
    annotator: null,
  };
}

export class ReviewController {
  readonly state: AppState;
  private listeners: Array<(state: AppState) => void> = [];

  constructor(
    private readonly client: ReviewApi,
    threshold = 0.5,
  ) {
    this.state = initialState(threshold);
  }

  onChange(listener: (state: AppState) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  selectedItem(): ReviewItem | null {
    return this.state.items.find((item) => item.id === this.state.selectedId) ?? null;
  }

  pendingItems(): ReviewItem[] {
    return this.state.items.filter((item) => item.status === "pending");
  }

  /** Fetch the queue; server order is authoritative. */
  async refreshQueue(): Promise<void> {
    try {
      this.state.items = await this.client.queue(this.state.threshold, this.state.sort);
      this.state.networkError = null;
      if (
        this.state.selectedId === null ||
        !this.state.items.some((item) => item.id === this.state.selectedId)
      ) {
        this.state.selectedId = this.pendingItems()[0]?.id ?? this.state.items[0]?.id ?? null;
      }
    } catch (error) {
      this.state.networkError = describe(error);
    }
    this.notify();
  }

  /** Threshold changes re-fetch rather than re-sort or filter locally. */
  async setThreshold(threshold: number): Promise<void> {
    this.state.threshold = threshold;
    await this.refreshQueue();
  }

  async setSort(sort: SortOrder): Promise<void> {
    this.state.sort = sort;
    await this.refreshQueue();
  }

  async refreshAgreement(): Promise<void> {
    try {
      this.state.agreement = await this.client.agreement();
      this.state.networkError = null;
    } catch (error) {
      this.state.networkError = describe(error);
    }
    this.notify();
  }

  select(id: string): void {
    this.state.selectedId = id;
    this.state.conflict = null;
    this.notify();
  }

  revealImages(): void {
    this.state.imagesRevealed = true;
    this.notify();
  }

  /** Advance selection to the next pending item after the current one. */
  advance(): void {
    const pending = this.pendingItems();
    if (pending.length === 0) {
      this.notify();
      return;
    }
    const order = this.state.items.map((item) => item.id);
    const from = this.state.selectedId ? order.indexOf(this.state.selectedId) : -1;
    const following = this.state.items
      .slice(from + 1)
      .find((item) => item.status === "pending");
    this.state.selectedId = (following ?? pending[0]).id;
    this.notify();
  }

  /**
   * Submit the moderator's decision for the selected meme. On success the
   * item is replaced with the server echo, selection advances to the next
   * pending item and the agreement panel refreshes. On conflict the stored
   * label is fetched and shown read-only. On network failure nothing is
   * changed locally (no optimistic state); the caller can retry.
   */
  async submitDecision(label: 0 | 1): Promise<void> {
    const current = this.selectedItem();
    if (current === null || current.status === "labeled") {
      return;
    }
    try {
      const updated = await this.client.submitLabel(
        current.id,
        label,
        this.state.annotator ?? undefined,
      );
      this.replaceItem(updated);
      this.state.conflict = null;
      this.state.networkError = null;
      this.advance();
      await this.refreshAgreement();
    } catch (error) {
      if (error instanceof ConflictError) {
        let stored: number | null = null;
        try {
          const fresh = await this.client.meme(current.id);
          this.replaceItem(fresh);
          stored = fresh.human_label;
        } catch {
          // keep the stale copy when the re-fetch also fails
        }
        this.state.conflict = { id: current.id, storedLabel: stored };
        this.notify();
        return;
      }
      this.state.networkError = describe(error);
      this.notify();
    }
  }

  skip(): void {
    this.advance();
  }

  private replaceItem(updated: ReviewItem): void {
    const index = this.state.items.findIndex((item) => item.id === updated.id);
    if (index >= 0) {
      this.state.items[index] = updated;
    }
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
