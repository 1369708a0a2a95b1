export type Category = "Animal" | "Human";
export type Origin = "Drawn" | "Propagated" | "Tracked" | "ReviewEdited";
export type Mode = "Label" | "Review";

export interface Box {
  box_id: string;
  frame_index: number;
  x: number;
  y: number;
  width: number;
  height: number;
  category: Category;
  origin: Origin;
  author_id: string;
}

export interface SubmissionState {
  submission_id: string;
  video_segment_id: string;
  labeler_id: string;
  mode: Mode;
  frame_width: number;
  frame_height: number;
  first_frame: number;
  last_frame: number;
  status: "InProgress" | "Submitted" | "Deleted";
  frames: Record<string, Box[]>;
  visited: number[];
  next_sequence_no: number;
}

export interface Segment {
  segment_id: string;
  video_id: string;
  first_frame: number;
  last_frame: number;
  predecessor_note: string;
}

export interface VideoInfo {
  video_id: string;
  frame_count: number;
  width: number;
  height: number;
  fps: number;
  segments: Segment[];
}

export interface SubmissionSummary {
  submission_id: string;
  video_segment_id: string;
  labeler_id: string;
  submitted_at: number | null;
  label_count: number;
}

export interface ClientEvent {
  sequence_no: number;
  kind: string;
  payload: Record<string, unknown>;
}

// Category rendering contract: animals red, humans blue.
export const CATEGORY_COLORS: Record<Category, string> = {
  Animal: "red",
  Human: "blue",
};

export const MIN_BOX_SIZE = 4; // mirrors the server-side size filter
export const MAX_BUFFER = 50;
export const PLAYBACK_INTERVAL_MS = 1000; // one frame per second

export function nextCategory(category: Category): Category {
  return category === "Animal" ? "Human" : "Animal";
}
