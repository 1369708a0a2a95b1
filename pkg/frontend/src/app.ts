import { ApiClient, ApiError } from "./api.js";
import { SubmissionEditor } from "./editor.js";
import { PlaybackController } from "./player.js";
import { Toolbar } from "./toolbar.js";
import type { Mode, SubmissionState, VideoInfo } from "./types.js";

const TIME_TICK_SECONDS = 5;

/**
 * Screen flow matching the labeling menus: login, then mode choice, then
 * video choice, then (review only) submission choice, then the editor.
 */
export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  editor: SubmissionEditor | null = null;
  player: PlaybackController | null = null;
  private timeTimer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, api = new ApiClient()) {
    this.root = root;
    this.api = api;
  }

  start(): void {
    this.showLogin();
  }

  private screen(className: string): HTMLElement {
    this.stopTimeTicks();
    const el = document.createElement("div");
    el.className = `screen ${className}`;
    this.root.replaceChildren(el);
    return el;
  }

  showLogin(message = ""): void {
    const screen = this.screen("login-screen");
    const form = document.createElement("form");
    const user = document.createElement("input");
    user.name = "username";
    user.placeholder = "username";
    const pass = document.createElement("input");
    pass.name = "password";
    pass.type = "password";
    pass.placeholder = "password";
    const go = document.createElement("button");
    go.type = "submit";
    go.textContent = "Log in";
    const note = document.createElement("p");
    note.className = "note";
    note.textContent = message;
    form.append(user, pass, go);
    screen.append(form, note);
    form.addEventListener("submit", (e) => {
      e.preventDefault();
      this.api
        .login(user.value, pass.value)
        .then(() => this.showModeMenu())
        .catch((err: ApiError) => {
          note.textContent = err.message;
        });
    });
  }

  showModeMenu(): void {
    const screen = this.screen("mode-menu");
    const title = document.createElement("h2");
    title.textContent = "What would you like to do?";
    const label = document.createElement("button");
    label.className = "choose-label";
    label.textContent = "Label a new video";
    const review = document.createElement("button");
    review.className = "choose-review";
    review.textContent = "Review a previous submission";
    label.addEventListener("click", () => void this.showVideoMenu("Label"));
    review.addEventListener("click", () => void this.showVideoMenu("Review"));
    screen.append(title, label, review);
  }

  async showVideoMenu(mode: Mode): Promise<void> {
    const screen = this.screen("video-menu");
    const title = document.createElement("h2");
    title.textContent = `Choose a video to ${mode.toLowerCase()}`;
    screen.append(title);
    let videos: VideoInfo[];
    try {
      videos = (await this.api.listVideos()).videos;
    } catch {
      this.showLogin("Session expired; please log in again.");
      return;
    }
    const list = document.createElement("ul");
    for (const video of videos) {
      for (const segment of video.segments) {
        const item = document.createElement("li");
        const pick = document.createElement("button");
        pick.className = "choose-video";
        pick.dataset.segmentId = segment.segment_id;
        pick.textContent =
          `${video.video_id} [${segment.first_frame}-${segment.last_frame}]`;
        pick.addEventListener("click", () => {
          if (mode === "Label") void this.openLabel(segment.segment_id);
          else void this.showSubmissionMenu(video.video_id, segment.segment_id);
        });
        item.append(pick);
        if (segment.predecessor_note) {
          const note = document.createElement("span");
          note.className = "predecessor-note";
          note.textContent = segment.predecessor_note;
          item.append(note);
        }
        list.append(item);
      }
    }
    screen.append(list);
  }

  async showSubmissionMenu(videoId: string, segmentId: string): Promise<void> {
    const screen = this.screen("submission-menu");
    const title = document.createElement("h2");
    title.textContent = "Choose a submission to review";
    screen.append(title);
    const { submissions } = await this.api.listVideoSubmissions(videoId);
    const list = document.createElement("ul");
    for (const sub of submissions) {
      if (sub.video_segment_id !== segmentId) continue;
      const item = document.createElement("li");
      const pick = document.createElement("button");
      pick.className = "choose-submission";
      pick.dataset.submissionId = sub.submission_id;
      pick.textContent =
        `${sub.submission_id} by ${sub.labeler_id} (${sub.label_count} labels)`;
      pick.addEventListener("click", () =>
        void this.openReview(segmentId, sub.submission_id),
      );
      item.append(pick);
      list.append(item);
    }
    screen.append(list);
  }

  async openLabel(segmentId: string): Promise<void> {
    const state = await this.api.createSubmission("Label", segmentId);
    this.openEditor(state);
  }

  async openReview(segmentId: string, reviewedSubmissionId: string): Promise<void> {
    const state = await this.api.createSubmission(
      "Review", segmentId, reviewedSubmissionId,
    );
    this.openEditor(state);
  }

  /** Reopen an existing in-progress submission (browser reload path). */
  async resumeSubmission(submissionId: string): Promise<void> {
    const state = await this.api.getSubmission(submissionId);
    this.openEditor(state);
  }

  openEditor(state: SubmissionState): void {
    const screen = this.screen("editor-screen");

    const header = document.createElement("div");
    header.className = "editor-header";
    header.textContent =
      `${state.mode} — ${state.video_segment_id} (${state.labeler_id})`;

    const stage = document.createElement("div");
    const toolbarRoot = document.createElement("div");
    screen.append(header, stage, toolbarRoot);

    this.editor = new SubmissionEditor(this.api, state, stage);
    this.player = new PlaybackController(this.editor);
    const toolbar = new Toolbar(this.editor, this.player, toolbarRoot);
    toolbar.onSubmitted = () => this.showModeMenu();
    toolbar.onDeleted = () => this.showModeMenu();
    this.editor.onConflict = () => {
      header.textContent = "Out of sync with the server; state reloaded.";
    };
    void this.editor.loadFrameImage(state.first_frame);

    this.timeTimer = setInterval(() => {
      this.editor?.recordActiveSeconds(TIME_TICK_SECONDS);
    }, TIME_TICK_SECONDS * 1000);
  }

  private stopTimeTicks(): void {
    if (this.timeTimer !== null) {
      clearInterval(this.timeTimer);
      this.timeTimer = null;
    }
    this.player?.pause();
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (root) new App(root).start();
}
