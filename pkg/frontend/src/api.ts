import type { AgreementStats, ReviewItem, SortOrder } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class NotFoundError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NotFoundError";
  }
}

/** What the controller needs from the service; ApiClient is the real one. */
export interface ReviewApi {
  health(): Promise<{ status: string; version: string; memes: number }>;
  queue(threshold?: number, sort?: SortOrder): Promise<ReviewItem[]>;
  meme(id: string): Promise<ReviewItem>;
  imageUrl(id: string): string;
  submitLabel(id: string, label: 0 | 1, annotator?: string): Promise<ReviewItem>;
  agreement(): Promise<AgreementStats>;
}

/** Thin typed client over the review service; fetch is injectable for tests. */
export class ApiClient implements ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (response.status === 404) {
      throw new NotFoundError(`not found: ${path}`);
    }
    if (!response.ok) {
      throw new Error(`GET ${path} failed with ${response.status}`);
    }
    return (await response.json()) as T;
  }

  async health(): Promise<{ status: string; version: string; memes: number }> {
    return this.get("/api/health");
  }

  async queue(threshold?: number, sort: SortOrder = "score"): Promise<ReviewItem[]> {
    const params = new URLSearchParams();
    if (threshold !== undefined) params.set("threshold", String(threshold));
    params.set("sort", sort);
    return this.get(`/api/queue?${params.toString()}`);
  }

  async meme(id: string): Promise<ReviewItem> {
    return this.get(`/api/memes/${encodeURIComponent(id)}`);
  }

  imageUrl(id: string): string {
    return `${this.baseUrl}/api/memes/${encodeURIComponent(id)}/image`;
  }

  async submitLabel(id: string, label: 0 | 1, annotator?: string): Promise<ReviewItem> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/memes/${encodeURIComponent(id)}/label`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ label, annotator: annotator ?? null }),
      },
    );
    if (response.status === 404) {
      throw new NotFoundError(`unknown meme ${id}`);
    }
    if (response.status === 409) {
      throw new ConflictError(`meme ${id} already labeled differently`);
    }
    if (!response.ok) {
      throw new Error(`label submission failed with ${response.status}`);
    }
    return (await response.json()) as ReviewItem;
  }

  async agreement(): Promise<AgreementStats> {
    return this.get("/api/stats/agreement");
  }
}
