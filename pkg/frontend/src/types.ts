/** Wire types for the retrieval service JSON API. */

export interface FramePayload {
  keyframe_id: number;
  video_id: string;
  frame_index: number;
  image_url: string;
}

export interface ResultItem extends FramePayload {
  score: number;
}

export interface AugmentResponse {
  drafts: string[];
  warning?: string;
}

export interface SearchResponse {
  results: ResultItem[];
}

export interface NeighborsResponse {
  center: number;
  radius: number;
  frames: FramePayload[];
}

export interface VideoLinkResponse {
  url: string | null;
  timestamp_seconds: number;
}

export interface SubmitResponse {
  status: "forwarded" | "logged";
  keyframe_id: number;
  video_id: string;
  frame_index: number;
}

export interface HealthResponse {
  status: string;
  keyframes: number;
  dimension: number;
  defaults: {
    n_drafts: number;
    n_selected: number;
    k_per_draft: number;
    final_k: number;
    neighbor_radius: number;
  };
}

export interface SearchRequestBody {
  original_query: string;
  drafts: string[];
  k?: number;
  K?: number;
  ocr_filter?: string;
}

/** Ground-truth record pasted into eval-replay mode; relevant grid frames
 * (same video, frame index inside the range) render highlighted. */
export interface ReplayRecord {
  video_id: string;
  frame_start: number;
  frame_end: number;
}

export interface DraftItem {
  text: string;
  selected: boolean;
}
