import { ApiClient, ApiError } from "./api.js";
import { SessionStore, parseReplayRecord } from "./state.js";
import { renderDrafts, renderGrid, renderNeighborStrip } from "./render.js";
import type { SearchRequestBody } from "./types.js";

export interface AppOptions {
  /** Mirror session state into the URL and restore it on mount. */
  history?: boolean;
}

export interface AppHandle {
  store: SessionStore;
  refs: Record<string, HTMLElement>;
  runSearch: () => Promise<void>;
  runAugment: () => Promise<void>;
}

const TEMPLATE = `
<header class="topbar">
  <h1>rapid</h1>
  <span class="subtitle">text-based video event retrieval</span>
</header>
<section class="query-panel">
  <div class="query-row">
    <input id="query" type="text" placeholder="Original query, e.g. 'A monk is writing'" autocomplete="off">
    <label class="n-drafts-label">drafts
      <input id="n-drafts" type="number" min="1" max="20" value="6">
    </label>
    <button id="augment" disabled>Augment</button>
    <button id="search" disabled>Search</button>
  </div>
  <div class="params-row">
    <label>k/draft <input id="param-k" type="number" min="1" placeholder="default"></label>
    <label>final K <input id="param-K" type="number" min="1" placeholder="default"></label>
    <label>OCR filter <input id="param-ocr" type="text" placeholder="on-screen text"></label>
    <label>&pi; <input id="param-pi" type="number" min="0" placeholder="default"></label>
    <label class="orig-label"><input id="include-original" type="checkbox" checked> search with original query too</label>
  </div>
  <div id="banner" class="banner" hidden></div>
  <div id="drafts" class="drafts"></div>
</section>
<section id="grid" class="grid"></section>
<aside id="inspector" class="inspector" hidden>
  <h2>Selected keyframe <span id="selected-id"></span></h2>
  <div id="neighbors" class="strip"></div>
  <div class="actions">
    <a id="video-link" target="_blank" rel="noopener" hidden>Open video</a>
    <button id="submit">Submit</button>
    <span id="submit-status" class="submit-status"></span>
  </div>
</aside>
<details class="replay-panel">
  <summary>Eval replay</summary>
  <p>Paste a ground-truth record ({"video_id", "frame_start", "frame_end"}) to highlight relevant frames.</p>
  <textarea id="replay-input" rows="3"></textarea>
  <button id="replay-load">Highlight</button>
  <span id="replay-status"></span>
</details>
`;

export function mountApp(root: HTMLElement, api: ApiClient, options: AppOptions = {}): AppHandle {
  root.innerHTML = TEMPLATE;
  const store = new SessionStore();

  const ref = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };

  const refs = {
    query: ref<HTMLInputElement>("query"),
    nDrafts: ref<HTMLInputElement>("n-drafts"),
    augment: ref<HTMLButtonElement>("augment"),
    search: ref<HTMLButtonElement>("search"),
    paramK: ref<HTMLInputElement>("param-k"),
    paramFinalK: ref<HTMLInputElement>("param-K"),
    paramOcr: ref<HTMLInputElement>("param-ocr"),
    paramPi: ref<HTMLInputElement>("param-pi"),
    includeOriginal: ref<HTMLInputElement>("include-original"),
    banner: ref<HTMLDivElement>("banner"),
    drafts: ref<HTMLDivElement>("drafts"),
    grid: ref<HTMLElement>("grid"),
    inspector: ref<HTMLElement>("inspector"),
    selectedId: ref<HTMLSpanElement>("selected-id"),
    neighbors: ref<HTMLDivElement>("neighbors"),
    videoLink: ref<HTMLAnchorElement>("video-link"),
    submit: ref<HTMLButtonElement>("submit"),
    submitStatus: ref<HTMLSpanElement>("submit-status"),
    replayInput: ref<HTMLTextAreaElement>("replay-input"),
    replayLoad: ref<HTMLButtonElement>("replay-load"),
    replayStatus: ref<HTMLSpanElement>("replay-status"),
  };

  let searchAbort: AbortController | null = null;

  function syncUrl(): void {
    if (!options.history || typeof history === "undefined") return;
    const params = store.toUrlParams().toString();
    history.replaceState(null, "", params ? `?${params}` : location.pathname);
  }

  async function runAugment(): Promise<void> {
    const state = store.getState();
    if (!store.canAugment()) return;
    store.update({ augmentPending: true, augmentError: null, warning: null });
    try {
      const response = await api.augment(state.originalQuery, state.nDrafts);
      store.setDrafts(response.drafts, 0);
      store.update({ augmentPending: false, warning: response.warning ?? null });
    } catch (error) {
      const message =
        error instanceof ApiError
          ? `Drafting failed (${error.status}). Retry, or search with the original query only.`
          : `Drafting failed: ${String(error)}`;
      store.update({ augmentPending: false, augmentError: message });
    }
    syncUrl();
  }

  async function runSearch(): Promise<void> {
    if (!store.canSearch()) return;
    const state = store.getState();
    searchAbort?.abort(); // cancel any in-flight search
    searchAbort = new AbortController();
    store.update({
      searchPending: true,
      searchError: null,
      selectedKeyframe: null,
      neighbors: null,
      videoLink: null,
      submitStatus: null,
    });
    const body: SearchRequestBody & { include_original_as_draft: boolean } = {
      original_query: state.originalQuery,
      drafts: store.selectedDrafts(),
      include_original_as_draft: state.includeOriginal,
    };
    if (state.params.k !== null) body.k = state.params.k;
    if (state.params.K !== null) body.K = state.params.K;
    if (state.params.ocrFilter.trim()) body.ocr_filter = state.params.ocrFilter.trim();
    try {
      const response = await api.search(body, searchAbort.signal);
      store.update({ searchPending: false, results: response.results });
      syncUrl();
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") return;
      store.update({ searchPending: false, searchError: String(error) });
    }
  }

  async function selectKeyframe(keyframeId: number): Promise<void> {
    const pi = store.getState().params.pi;
    store.update({ selectedKeyframe: keyframeId, submitStatus: null });
    try {
      const [neighbors, videoLink] = await Promise.all([
        api.neighbors(keyframeId, pi ?? undefined),
        api.videoLink(keyframeId),
      ]);
      if (store.getState().selectedKeyframe !== keyframeId) return; // stale
      store.update({
        neighbors,
        videoLink: { url: videoLink.url, timestampSeconds: videoLink.timestamp_seconds },
      });
    } catch (error) {
      store.update({ neighbors: null, videoLink: null, searchError: String(error) });
    }
  }

  async function runSubmit(): Promise<void> {
    const keyframeId = store.getState().selectedKeyframe;
    if (keyframeId === null) return;
    try {
      const response = await api.submit(keyframeId);
      store.update({ submitStatus: `${response.status}: keyframe ${response.keyframe_id}` });
    } catch (error) {
      store.update({ submitStatus: `submit failed: ${String(error)}` });
    }
  }

  // input bindings
  refs.query.addEventListener("input", () => store.update({ originalQuery: refs.query.value }));
  refs.nDrafts.addEventListener("input", () => {
    const n = Number(refs.nDrafts.value);
    if (Number.isFinite(n) && n >= 1) store.update({ nDrafts: n });
  });
  refs.includeOriginal.addEventListener("change", () =>
    store.update({ includeOriginal: refs.includeOriginal.checked }),
  );
  const numberParam = (input: HTMLInputElement) => () => {
    const value = input.value.trim();
    return value === "" ? null : Number(value);
  };
  const readK = numberParam(refs.paramK);
  const readFinalK = numberParam(refs.paramFinalK);
  const readPi = numberParam(refs.paramPi);
  refs.paramK.addEventListener("change", () =>
    store.update({ params: { ...store.getState().params, k: readK() } }),
  );
  refs.paramFinalK.addEventListener("change", () =>
    store.update({ params: { ...store.getState().params, K: readFinalK() } }),
  );
  refs.paramPi.addEventListener("change", () =>
    store.update({ params: { ...store.getState().params, pi: readPi() } }),
  );
  refs.paramOcr.addEventListener("change", () => {
    store.update({ params: { ...store.getState().params, ocrFilter: refs.paramOcr.value } });
    if (store.getState().results !== null) void runSearch(); // filter re-issues the search
  });
  refs.augment.addEventListener("click", () => void runAugment());
  refs.search.addEventListener("click", () => void runSearch());
  refs.submit.addEventListener("click", () => void runSubmit());
  refs.replayLoad.addEventListener("click", () => {
    try {
      store.update({ replay: parseReplayRecord(refs.replayInput.value) });
      refs.replayStatus.textContent = "replay active";
    } catch (error) {
      refs.replayStatus.textContent = String(error);
    }
    syncUrl();
  });

  function render(): void {
    const state = store.getState();
    if (refs.query.value !== state.originalQuery) refs.query.value = state.originalQuery;
    refs.augment.disabled = !store.canAugment();
    refs.search.disabled = !store.canSearch() || state.searchPending;
    refs.augment.textContent = state.augmentPending ? "Augmenting..." : "Augment";
    refs.search.textContent = state.searchPending ? "Searching..." : "Search";
    refs.includeOriginal.checked = state.includeOriginal;

    const bannerText = state.augmentError ?? state.searchError ?? state.warning;
    refs.banner.hidden = !bannerText;
    refs.banner.textContent = bannerText ?? "";

    renderDrafts(refs.drafts, state, (index) => store.toggleDraft(index));
    renderGrid(refs.grid, state, api, (id) => void selectKeyframe(id));
    refs.inspector.hidden = state.selectedKeyframe === null;
    refs.selectedId.textContent = state.selectedKeyframe === null ? "" : `#${state.selectedKeyframe}`;
    renderNeighborStrip(refs.neighbors, state, api, (id) => void selectKeyframe(id));
    if (state.videoLink?.url) {
      refs.videoLink.hidden = false;
      refs.videoLink.href = state.videoLink.url;
      refs.videoLink.textContent = `Open video @ ${state.videoLink.timestampSeconds.toFixed(1)}s`;
    } else {
      refs.videoLink.hidden = true;
    }
    refs.submit.disabled = state.selectedKeyframe === null;
    refs.submitStatus.textContent = state.submitStatus ?? "";
  }

  store.subscribe(render);

  if (options.history && typeof location !== "undefined" && location.search) {
    store.loadUrlParams(new URLSearchParams(location.search));
    const restored = store.getState();
    refs.nDrafts.value = String(restored.nDrafts);
    refs.paramK.value = restored.params.k === null ? "" : String(restored.params.k);
    refs.paramFinalK.value = restored.params.K === null ? "" : String(restored.params.K);
    refs.paramOcr.value = restored.params.ocrFilter;
    refs.paramPi.value = restored.params.pi === null ? "" : String(restored.params.pi);
    if (store.canSearch()) void runSearch(); // rebuild the grid for the restored session
  }
  render();

  return { store, refs, runSearch, runAugment };
}
