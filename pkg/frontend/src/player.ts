import { SubmissionEditor } from "./editor.js";
import { PLAYBACK_INTERVAL_MS } from "./types.js";

/** Frame playback at one frame per second, plus stop-to-first-frame. */
export class PlaybackController {
  private editor: SubmissionEditor;
  private timer: ReturnType<typeof setInterval> | null = null;

  onStateChange: (() => void) | null = null;

  constructor(editor: SubmissionEditor) {
    this.editor = editor;
  }

  get playing(): boolean {
    return this.timer !== null;
  }

  play(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      if (this.editor.atLastFrame()) {
        this.pause();
        return;
      }
      void this.editor.forward();
    }, PLAYBACK_INTERVAL_MS);
    this.onStateChange?.();
  }

  pause(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
      this.onStateChange?.();
    }
  }

  toggle(): void {
    if (this.playing) this.pause();
    else this.play();
  }

  /** The square stop button: halt playback and return to the first frame. */
  async stop(): Promise<void> {
    this.pause();
    await this.editor.goTo(this.editor.state.first_frame);
  }
}
