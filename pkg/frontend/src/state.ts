import type { DraftItem, NeighborsResponse, ReplayRecord, ResultItem } from "./types.js";

export interface SearchParams {
  k: number | null; // per-draft candidate count; null = server default
  K: number | null; // final result count; null = server default
  ocrFilter: string;
  pi: number | null; // neighbor radius; null = server default
}

export interface SessionState {
  originalQuery: string;
  nDrafts: number; // how many drafts to request on Augment
  drafts: DraftItem[];
  includeOriginal: boolean; // fallback-to-original toggle
  params: SearchParams;
  augmentPending: boolean;
  augmentError: string | null;
  warning: string | null;
  searchPending: boolean;
  searchError: string | null;
  results: ResultItem[] | null; // null = no search issued yet
  selectedKeyframe: number | null;
  neighbors: NeighborsResponse | null;
  videoLink: { url: string | null; timestampSeconds: number } | null;
  submitStatus: string | null;
  replay: ReplayRecord | null;
}

export function initialState(): SessionState {
  return {
    originalQuery: "",
    nDrafts: 6,
    drafts: [],
    includeOriginal: true,
    params: { k: null, K: null, ocrFilter: "", pi: null },
    augmentPending: false,
    augmentError: null,
    warning: null,
    searchPending: false,
    searchError: null,
    results: null,
    selectedKeyframe: null,
    neighbors: null,
    videoLink: null,
    submitStatus: null,
    replay: null,
  };
}

type Listener = (state: SessionState) => void;

/** Single-session store. All mutation goes through update() so every
 * change notifies subscribers exactly once. */
export class SessionStore {
  private state: SessionState = initialState();
  private listeners: Listener[] = [];

  getState(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  selectedDrafts(): string[] {
    return this.state.drafts.filter((d) => d.selected).map((d) => d.text);
  }

  selectedCount(): number {
    return this.state.drafts.filter((d) => d.selected).length;
  }

  /** Search is allowed only with a query and either a selected draft or the
   * fallback-to-original toggle. */
  canSearch(): boolean {
    const hasQuery = this.state.originalQuery.trim().length > 0;
    return hasQuery && (this.selectedCount() >= 1 || this.state.includeOriginal);
  }

  canAugment(): boolean {
    return this.state.originalQuery.trim().length > 0 && !this.state.augmentPending;
  }

  setDrafts(drafts: string[], defaultSelected: number): void {
    this.update({
      drafts: drafts.map((text, i) => ({ text, selected: i < defaultSelected })),
      selectedKeyframe: null,
      neighbors: null,
    });
  }

  toggleDraft(index: number): void {
    const drafts = this.state.drafts.map((d, i) =>
      i === index ? { ...d, selected: !d.selected } : d,
    );
    this.update({ drafts });
  }

  /** Everything needed to reconstruct an equivalent session after reload. */
  toUrlParams(): URLSearchParams {
    const p = new URLSearchParams();
    const s = this.state;
    if (s.originalQuery) p.set("q", s.originalQuery);
    if (s.drafts.length) {
      p.set("drafts", JSON.stringify(s.drafts.map((d) => d.text)));
      const selected = s.drafts.flatMap((d, i) => (d.selected ? [i] : []));
      if (selected.length) p.set("sel", selected.join(","));
    }
    if (!s.includeOriginal) p.set("orig", "0");
    if (s.nDrafts !== 6) p.set("n", String(s.nDrafts));
    if (s.params.k !== null) p.set("k", String(s.params.k));
    if (s.params.K !== null) p.set("K", String(s.params.K));
    if (s.params.ocrFilter) p.set("ocr", s.params.ocrFilter);
    if (s.params.pi !== null) p.set("pi", String(s.params.pi));
    if (s.replay) p.set("replay", JSON.stringify(s.replay));
    return p;
  }

  loadUrlParams(params: URLSearchParams): void {
    const patch: Partial<SessionState> = {};
    const q = params.get("q");
    if (q) patch.originalQuery = q;
    const draftsRaw = params.get("drafts");
    if (draftsRaw) {
      try {
        const texts = JSON.parse(draftsRaw) as string[];
        const selected = new Set(
          (params.get("sel") ?? "")
            .split(",")
            .filter((x) => x !== "")
            .map(Number),
        );
        patch.drafts = texts.map((text, i) => ({ text, selected: selected.has(i) }));
      } catch {
        // malformed drafts param; start without drafts
      }
    }
    if (params.get("orig") === "0") patch.includeOriginal = false;
    const n = params.get("n");
    if (n && Number.isFinite(Number(n))) patch.nDrafts = Number(n);
    const k = params.get("k");
    const K = params.get("K");
    const pi = params.get("pi");
    patch.params = {
      k: k ? Number(k) : null,
      K: K ? Number(K) : null,
      ocrFilter: params.get("ocr") ?? "",
      pi: pi ? Number(pi) : null,
    };
    const replayRaw = params.get("replay");
    if (replayRaw) {
      try {
        patch.replay = JSON.parse(replayRaw) as ReplayRecord;
      } catch {
        // ignore malformed replay param
      }
    }
    this.update(patch);
  }
}

export function parseReplayRecord(text: string): ReplayRecord {
  const obj = JSON.parse(text) as Record<string, unknown>;
  if (
    typeof obj.video_id !== "string" ||
    typeof obj.frame_start !== "number" ||
    typeof obj.frame_end !== "number"
  ) {
    throw new Error("replay record needs video_id, frame_start, frame_end");
  }
  return { video_id: obj.video_id, frame_start: obj.frame_start, frame_end: obj.frame_end };
}

export function isReplayRelevant(replay: ReplayRecord | null, item: ResultItem): boolean {
  return (
    replay !== null &&
    item.video_id === replay.video_id &&
    item.frame_index >= replay.frame_start &&
    item.frame_index <= replay.frame_end
  );
}
