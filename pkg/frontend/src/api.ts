import type {
  ClientEvent,
  Mode,
  SubmissionState,
  SubmissionSummary,
  VideoInfo,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export interface AdvanceResult {
  created: unknown[];
  sequence_no: number;
  next_sequence_no: number;
}

/** Thin typed client for the labeling API; the one place that talks HTTP. */
export class ApiClient {
  private base: string;
  token: string | null = null;
  accountId: string | null = null;

  constructor(base = "") {
    this.base = base;
  }

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = "error";
      let message = response.statusText;
      try {
        const data = await response.json();
        code = data.code ?? code;
        message = data.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return response.json();
  }

  async login(username: string, password: string): Promise<void> {
    const data = await this.request("POST", "/api/login", { username, password });
    this.token = data.token;
    this.accountId = data.account_id;
  }

  listVideos(): Promise<{ videos: VideoInfo[] }> {
    return this.request("GET", "/api/videos");
  }

  listVideoSubmissions(videoId: string): Promise<{ submissions: SubmissionSummary[] }> {
    return this.request("GET", `/api/videos/${videoId}/submissions`);
  }

  async fetchFrameBlob(videoId: string, n: number): Promise<Blob> {
    const response = await fetch(`${this.base}/api/videos/${videoId}/frames/${n}`, {
      headers: this.token ? { Authorization: `Bearer ${this.token}` } : {},
    });
    if (!response.ok) throw new ApiError(response.status, "frame", "frame fetch failed");
    return response.blob();
  }

  createSubmission(
    mode: Mode,
    segmentId: string,
    reviewedSubmissionId?: string,
  ): Promise<SubmissionState> {
    return this.request("POST", "/api/submissions", {
      mode,
      segment_id: segmentId,
      reviewed_submission_id: reviewedSubmissionId ?? null,
    });
  }

  getSubmission(submissionId: string): Promise<SubmissionState> {
    return this.request("GET", `/api/submissions/${submissionId}`);
  }

  postEvents(submissionId: string, events: ClientEvent[]): Promise<{ stored: number[] }> {
    return this.request("POST", `/api/submissions/${submissionId}/events`, { events });
  }

  advance(
    submissionId: string,
    from: number,
    to: number,
    trackerEnabled: boolean,
    buffer: number,
  ): Promise<AdvanceResult> {
    return this.request("POST", `/api/submissions/${submissionId}/advance`, {
      from,
      to,
      tracker_enabled: trackerEnabled,
      buffer,
    });
  }

  submit(submissionId: string): Promise<SubmissionState> {
    // Destructive requests always carry confirm=true; the modal gates them.
    return this.request("POST", `/api/submissions/${submissionId}/submit?confirm=true`);
  }

  deleteSubmission(submissionId: string): Promise<SubmissionState> {
    return this.request("DELETE", `/api/submissions/${submissionId}?confirm=true`);
  }
}
