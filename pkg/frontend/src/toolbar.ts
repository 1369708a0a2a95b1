import { SubmissionEditor } from "./editor.js";
import { PlaybackController } from "./player.js";
import { MAX_BUFFER } from "./types.js";

const HELP_TEXT = [
  "Drag on the frame to draw a box (animals red, humans blue).",
  "Click a box until its color reflects the class.",
  "SHIFT+click deletes a box.",
  "CTRL+click selects boxes; drag to move all selected at once.",
  "Arrows step frames; play advances one frame per second; the square returns to the first frame.",
  "The slider sets the tracking search margin; the copy toggle forces plain copies.",
  "Undo restores the current frame to how it looked when you arrived.",
  "The trash can deletes all progress. The check mark submits a finished video.",
].join("\n");

function button(label: string, title: string, className: string): HTMLButtonElement {
  const el = document.createElement("button");
  el.textContent = label;
  el.title = title;
  el.className = className;
  return el;
}

/**
 * Bottom toolbar: progress readout, navigation, undo/trash/submit (each
 * behind a confirmation modal), copy toggle, tracking slider, eye toggle
 * and help. Only confirmed destructive actions ever reach the server.
 */
export class Toolbar {
  readonly root: HTMLElement;
  private editor: SubmissionEditor;
  private player: PlaybackController;
  private progress: HTMLElement;
  private playButton: HTMLButtonElement;
  private copyButton: HTMLButtonElement;
  private eyeButton: HTMLButtonElement;
  private slider: HTMLInputElement;

  onSubmitted: (() => void) | null = null;
  onDeleted: (() => void) | null = null;

  constructor(editor: SubmissionEditor, player: PlaybackController, root: HTMLElement) {
    this.editor = editor;
    this.player = player;
    this.root = root;
    root.classList.add("toolbar");

    this.progress = document.createElement("span");
    this.progress.className = "progress";

    const back = button("◀", "previous frame", "nav-back");
    const fwd = button("▶", "next frame", "nav-forward");
    this.playButton = button("⏵", "play (1 frame per second)", "play");
    const stop = button("⏹", "back to first frame", "stop");
    const undo = button("↶", "undo boxes drawn in this frame", "undo");
    const trash = button("🗑", "delete all progress", "trash");
    const submit = button("✓", "submit finished video", "submit");
    this.copyButton = button("⧉", "copy boxes instead of tracking", "copy-toggle");
    this.eyeButton = button("👁", "toggle box display", "eye-toggle");
    const help = button("?", "help", "help");

    this.slider = document.createElement("input");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = String(MAX_BUFFER);
    this.slider.value = String(editor.trackerBuffer);
    this.slider.className = "tracker-slider";
    this.slider.title = "tracking search margin (px)";

    back.addEventListener("click", () => void this.editor.backward());
    fwd.addEventListener("click", () => void this.editor.forward());
    this.playButton.addEventListener("click", () => this.player.toggle());
    stop.addEventListener("click", () => void this.player.stop());
    undo.addEventListener("click", () =>
      this.confirm("Remove the bounding boxes just drawn in this frame?", () =>
        void this.editor.undoCurrentFrame(),
      ),
    );
    trash.addEventListener("click", () =>
      this.confirm("Delete ALL progress on this video? This cannot be undone.", () => {
        void this.editor.deleteProgress().then(() => this.onDeleted?.());
      }),
    );
    submit.addEventListener("click", () =>
      this.confirm("Submit this video? Only submit when the whole video is finished.", () => {
        void this.editor.submitWork().then(() => this.onSubmitted?.());
      }),
    );
    this.copyButton.addEventListener("click", () => {
      this.editor.copyMode = !this.editor.copyMode;
      this.update();
    });
    this.eyeButton.addEventListener("click", () => {
      this.editor.setEye(!this.editor.eyeOn);
      this.update();
    });
    this.slider.addEventListener("input", () => {
      this.editor.trackerBuffer = Number(this.slider.value);
    });
    help.addEventListener("click", () => this.showHelp());

    root.replaceChildren(
      this.progress, back, fwd, this.playButton, stop, undo, trash, submit,
      this.copyButton, this.slider, this.eyeButton, help,
    );

    editor.onChange = () => this.update();
    player.onStateChange = () => this.update();
    this.update();
  }

  update(): void {
    this.progress.textContent = `${this.editor.progressPercent}%`;
    this.playButton.textContent = this.player.playing ? "⏸" : "⏵";
    this.copyButton.classList.toggle("active", this.editor.copyMode);
    this.eyeButton.classList.toggle("active", !this.editor.eyeOn);
  }

  /** Modal gate: the action callback runs only on explicit confirmation. */
  confirm(message: string, onConfirm: () => void): void {
    const backdrop = document.createElement("div");
    backdrop.className = "modal-backdrop";
    const modal = document.createElement("div");
    modal.className = "modal";
    const text = document.createElement("p");
    text.textContent = message;
    const yes = button("Confirm", "confirm", "modal-confirm");
    const no = button("Cancel", "cancel", "modal-cancel");
    modal.append(text, yes, no);
    backdrop.append(modal);
    document.body.append(backdrop);
    yes.addEventListener("click", () => {
      backdrop.remove();
      onConfirm();
    });
    no.addEventListener("click", () => backdrop.remove());
  }

  private showHelp(): void {
    const backdrop = document.createElement("div");
    backdrop.className = "modal-backdrop";
    const modal = document.createElement("div");
    modal.className = "modal help-modal";
    const pre = document.createElement("pre");
    pre.textContent = HELP_TEXT;
    const close = button("Close", "close help", "modal-cancel");
    close.addEventListener("click", () => backdrop.remove());
    modal.append(pre, close);
    backdrop.append(modal);
    document.body.append(backdrop);
  }
}
