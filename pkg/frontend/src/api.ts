import type {
  AugmentResponse,
  HealthResponse,
  NeighborsResponse,
  SearchRequestBody,
  SearchResponse,
  SubmitResponse,
  VideoLinkResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service JSON API. All reads; the only write
 * is submit(). */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = JSON.stringify(JSON.parse(body).detail);
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, `${path}: ${detail}`);
    }
    return JSON.parse(body) as T;
  }

  private post<T>(path: string, payload: unknown, signal?: AbortSignal): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
      signal,
    });
  }

  health(): Promise<HealthResponse> {
    return this.request("/api/health");
  }

  augment(query: string, nDrafts?: number): Promise<AugmentResponse> {
    const payload: Record<string, unknown> = { query };
    if (nDrafts !== undefined) payload.n_drafts = nDrafts;
    return this.post("/api/augment", payload);
  }

  search(body: SearchRequestBody, signal?: AbortSignal): Promise<SearchResponse> {
    return this.post("/api/search", body, signal);
  }

  neighbors(keyframeId: number, pi?: number): Promise<NeighborsResponse> {
    const suffix = pi === undefined ? "" : `?pi=${pi}`;
    return this.request(`/api/keyframes/${keyframeId}/neighbors${suffix}`);
  }

  videoLink(keyframeId: number): Promise<VideoLinkResponse> {
    return this.request(`/api/keyframes/${keyframeId}/video_link`);
  }

  submit(keyframeId: number): Promise<SubmitResponse> {
    return this.post("/api/submit", { keyframe_id: keyframeId });
  }

  imageUrl(relative: string): string {
    return this.baseUrl + relative;
  }
}
