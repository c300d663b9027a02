import type { ApiClient } from "./api.js";
import type { FramePayload, ResultItem } from "./types.js";
import { isReplayRelevant } from "./state.js";
import type { SessionState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDrafts(
  container: HTMLElement,
  state: SessionState,
  onToggle: (index: number) => void,
): void {
  container.replaceChildren();
  state.drafts.forEach((draft, index) => {
    const row = el("label", "draft-row");
    const box = el("input") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = draft.selected;
    box.dataset.index = String(index);
    box.addEventListener("change", () => onToggle(index));
    row.append(box, el("span", "draft-text", draft.text));
    container.append(row);
  });
}

/** Result grid in rank order; cells matching the replay record get the
 * `relevant` class (green highlight). */
export function renderGrid(
  container: HTMLElement,
  state: SessionState,
  api: ApiClient,
  onSelect: (keyframeId: number) => void,
): void {
  container.replaceChildren();
  if (state.results === null) return;
  if (state.results.length === 0) {
    container.append(el("p", "empty-state", "No results. Try different drafts or clear the OCR filter."));
    return;
  }
  state.results.forEach((item: ResultItem, rank: number) => {
    const cell = el("figure", "grid-cell");
    cell.dataset.keyframeId = String(item.keyframe_id);
    if (item.keyframe_id === state.selectedKeyframe) cell.classList.add("selected");
    if (isReplayRelevant(state.replay, item)) cell.classList.add("relevant");
    const img = el("img", "thumb") as HTMLImageElement;
    img.loading = "lazy";
    img.src = api.imageUrl(item.image_url);
    img.alt = `${item.video_id} frame ${item.frame_index}`;
    const caption = el(
      "figcaption",
      "grid-caption",
      `${rank + 1}. ${item.video_id} #${item.frame_index}`,
    );
    caption.title = `score ${item.score.toFixed(4)}`;
    cell.append(img, caption);
    cell.addEventListener("click", () => onSelect(item.keyframe_id));
    container.append(cell);
  });
}

export function renderNeighborStrip(
  container: HTMLElement,
  state: SessionState,
  api: ApiClient,
  onSelect: (keyframeId: number) => void,
): void {
  container.replaceChildren();
  const strip = state.neighbors;
  if (!strip) return;
  strip.frames.forEach((frame: FramePayload) => {
    const cell = el("figure", "strip-cell");
    cell.dataset.keyframeId = String(frame.keyframe_id);
    if (frame.keyframe_id === strip.center) cell.classList.add("center");
    const img = el("img", "thumb-small") as HTMLImageElement;
    img.loading = "lazy";
    img.src = api.imageUrl(frame.image_url);
    img.alt = `${frame.video_id} frame ${frame.frame_index}`;
    cell.append(img, el("figcaption", "strip-caption", `#${frame.frame_index}`));
    cell.addEventListener("click", () => onSelect(frame.keyframe_id));
    container.append(cell);
  });
}
