import { ApiClient, ApiError } from "./api.js";
import {
  Box,
  CATEGORY_COLORS,
  ClientEvent,
  MIN_BOX_SIZE,
  SubmissionState,
  nextCategory,
} from "./types.js";

const CLICK_SLOP_PX = 3; // below this a press+release counts as a click
const AUTOSAVE_DELAY_MS = 1000;

interface DragState {
  kind: "draw" | "move";
  startX: number;
  startY: number;
  lastX: number;
  lastY: number;
  boxId: string | null; // press target for move/click
  moved: boolean;
}

/**
 * Editing surface for one submission.
 *
 * Holds only a mirror of the server state: every change is queued as an
 * event (autosaved within a second), and anything the server computes
 * (propagation, undo snapshots) is re-read from the server. Boxes render as
 * absolutely positioned overlay divs on top of the frame image.
 */
export class SubmissionEditor {
  readonly api: ApiClient;
  state: SubmissionState;
  currentFrame: number;
  selection = new Set<string>();
  eyeOn = true;
  copyMode = false;
  trackerBuffer = 10;

  onChange: (() => void) | null = null;
  onConflict: (() => void) | null = null;

  private stage: HTMLElement;
  private frameImage: HTMLImageElement;
  private overlay: HTMLElement;
  private pending: ClientEvent[] = [];
  private nextSeq: number;
  private flushTimer: ReturnType<typeof setTimeout> | null = null;
  private drag: DragState | null = null;
  private drawCounter = 0;
  private frameUrls = new Map<number, string>();

  constructor(api: ApiClient, state: SubmissionState, stage: HTMLElement) {
    this.api = api;
    this.state = state;
    this.currentFrame = state.first_frame;
    this.nextSeq = state.next_sequence_no;

    this.stage = stage;
    this.stage.classList.add("stage");
    this.stage.style.position = "relative";
    this.stage.style.width = `${state.frame_width}px`;
    this.stage.style.height = `${state.frame_height}px`;

    this.frameImage = document.createElement("img");
    this.frameImage.className = "frame-image";
    this.frameImage.draggable = false;
    this.overlay = document.createElement("div");
    this.overlay.className = "box-overlay";
    this.stage.replaceChildren(this.frameImage, this.overlay);

    this.stage.addEventListener("mousedown", (e) => this.onMouseDown(e as MouseEvent));
    this.stage.addEventListener("mousemove", (e) => this.onMouseMove(e as MouseEvent));
    this.stage.addEventListener("mouseup", (e) => this.onMouseUp(e as MouseEvent));

    this.render();
  }

  get videoId(): string {
    return this.state.video_segment_id.split(":")[0];
  }

  boxesOn(frame: number): Box[] {
    return this.state.frames[String(frame)] ?? [];
  }

  get progressPercent(): number {
    const span = this.state.last_frame - this.state.first_frame;
    if (span === 0) return 100;
    return Math.round(((this.currentFrame - this.state.first_frame) / span) * 100);
  }

  // -- event queue ------------------------------------------------------------

  private enqueue(kind: string, payload: Record<string, unknown>): void {
    this.pending.push({ sequence_no: this.nextSeq++, kind, payload });
    if (this.flushTimer === null) {
      this.flushTimer = setTimeout(() => {
        void this.flush();
      }, AUTOSAVE_DELAY_MS);
    }
  }

  async flush(): Promise<void> {
    if (this.flushTimer !== null) {
      clearTimeout(this.flushTimer);
      this.flushTimer = null;
    }
    if (this.pending.length === 0) return;
    const batch = this.pending;
    this.pending = [];
    try {
      await this.api.postEvents(this.state.submission_id, batch);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.resync();
        this.onConflict?.();
        return;
      }
      throw err;
    }
  }

  async resync(): Promise<void> {
    this.pending = [];
    this.state = await this.api.getSubmission(this.state.submission_id);
    this.nextSeq = this.state.next_sequence_no;
    this.selection.clear();
    this.render();
  }

  // -- box edits ---------------------------------------------------------------

  private setBoxes(frame: number, boxes: Box[]): void {
    this.state.frames[String(frame)] = boxes;
  }

  drawBox(x: number, y: number, width: number, height: number): Box | null {
    // Mirror the server-side filter so rejected boxes never leave the client.
    const clampedX = Math.max(0, x);
    const clampedY = Math.max(0, y);
    const clampedW = Math.min(x + width, this.state.frame_width) - clampedX;
    const clampedH = Math.min(y + height, this.state.frame_height) - clampedY;
    if (clampedW < MIN_BOX_SIZE || clampedH < MIN_BOX_SIZE) return null;
    const box: Box = {
      box_id: `ui${this.nextSeq}n${this.drawCounter++}`,
      frame_index: this.currentFrame,
      x: clampedX,
      y: clampedY,
      width: clampedW,
      height: clampedH,
      category: "Animal", // default class; click cycles
      origin: "Drawn",
      author_id: this.api.accountId ?? "",
    };
    this.setBoxes(this.currentFrame, [...this.boxesOn(this.currentFrame), box]);
    this.enqueue("BoxDrawn", { frame: this.currentFrame, box: { ...box } });
    this.render();
    return box;
  }

  cycleCategory(boxId: string): void {
    const boxes = this.boxesOn(this.currentFrame).map((b) =>
      b.box_id === boxId ? { ...b, category: nextCategory(b.category) } : b,
    );
    this.setBoxes(this.currentFrame, boxes);
    const category = boxes.find((b) => b.box_id === boxId)?.category;
    this.enqueue("BoxReclassified", {
      frame: this.currentFrame,
      box_id: boxId,
      category,
    });
    this.render();
  }

  deleteBox(boxId: string): void {
    this.setBoxes(
      this.currentFrame,
      this.boxesOn(this.currentFrame).filter((b) => b.box_id !== boxId),
    );
    this.selection.delete(boxId);
    this.enqueue("BoxDeleted", { frame: this.currentFrame, box_id: boxId });
    this.render();
  }

  toggleSelect(boxId: string): void {
    if (this.selection.has(boxId)) this.selection.delete(boxId);
    else this.selection.add(boxId);
    this.render();
  }

  /** Rigid translation of a set of boxes; one BoxMoved event per box. */
  translateBoxes(boxIds: Set<string>, dx: number, dy: number): void {
    const maxX = this.state.frame_width;
    const maxY = this.state.frame_height;
    const boxes = this.boxesOn(this.currentFrame).map((b) => {
      if (!boxIds.has(b.box_id)) return b;
      const x = Math.min(Math.max(b.x + dx, 0), maxX - b.width);
      const y = Math.min(Math.max(b.y + dy, 0), maxY - b.height);
      return { ...b, x, y };
    });
    this.setBoxes(this.currentFrame, boxes);
    for (const b of boxes) {
      if (boxIds.has(b.box_id)) {
        this.enqueue("BoxMoved", {
          frame: this.currentFrame,
          box_id: b.box_id,
          x: b.x,
          y: b.y,
        });
      }
    }
    this.render();
  }

  recordActiveSeconds(seconds: number): void {
    this.enqueue("TimeTick", { frame: this.currentFrame, seconds });
  }

  // -- navigation ----------------------------------------------------------------

  /**
   * Navigate to a frame. The server owns propagation: first forward visits in
   * Label mode populate the target frame (tracker per slider unless the copy
   * toggle forces plain copies); review mode never propagates.
   */
  async goTo(frame: number): Promise<Box[]> {
    if (frame < this.state.first_frame || frame > this.state.last_frame) return [];
    await this.flush(); // keep the event log ordered before the server event
    const trackerEnabled =
      this.state.mode === "Label" && !this.copyMode && this.trackerBuffer > 0;
    const result = await this.api.advance(
      this.state.submission_id,
      this.currentFrame,
      frame,
      trackerEnabled,
      this.trackerBuffer,
    );
    this.nextSeq = result.next_sequence_no;
    const created = result.created as Box[];
    if (created.length > 0) {
      this.setBoxes(frame, [...this.boxesOn(frame), ...created]);
    }
    if (!this.state.visited.includes(frame)) this.state.visited.push(frame);
    this.currentFrame = frame;
    this.selection.clear();
    await this.loadFrameImage(frame);
    this.render();
    return created;
  }

  forward(): Promise<Box[]> {
    return this.goTo(this.currentFrame + 1);
  }

  backward(): Promise<Box[]> {
    return this.goTo(this.currentFrame - 1);
  }

  atLastFrame(): boolean {
    return this.currentFrame >= this.state.last_frame;
  }

  // -- destructive operations (already confirmed by the caller) --------------------

  async undoCurrentFrame(): Promise<void> {
    await this.flush();
    await this.api.postEvents(this.state.submission_id, [
      { sequence_no: this.nextSeq++, kind: "Undo", payload: { frame: this.currentFrame } },
    ]);
    // The entry snapshot lives server-side; re-read rather than re-derive.
    await this.resync();
  }

  async submitWork(): Promise<SubmissionState> {
    await this.flush();
    const state = await this.api.submit(this.state.submission_id);
    this.state = state;
    return state;
  }

  async deleteProgress(): Promise<SubmissionState> {
    await this.flush();
    const state = await this.api.deleteSubmission(this.state.submission_id);
    this.state = state;
    return state;
  }

  // -- pointer interactions ---------------------------------------------------------

  private stagePoint(e: MouseEvent): { x: number; y: number } {
    const rect = this.stage.getBoundingClientRect();
    return { x: e.clientX - rect.left, y: e.clientY - rect.top };
  }

  private hitBox(x: number, y: number): Box | null {
    const boxes = this.boxesOn(this.currentFrame);
    for (let i = boxes.length - 1; i >= 0; i--) {
      const b = boxes[i];
      if (x >= b.x && x < b.x + b.width && y >= b.y && y < b.y + b.height) return b;
    }
    return null;
  }

  private onMouseDown(e: MouseEvent): void {
    if (this.state.status !== "InProgress") return;
    const { x, y } = this.stagePoint(e);
    const hit = this.hitBox(x, y);
    if (hit && e.shiftKey) {
      this.deleteBox(hit.box_id);
      return;
    }
    if (hit && e.ctrlKey) {
      this.toggleSelect(hit.box_id); // selection never touches geometry
      return;
    }
    this.drag = {
      kind: hit ? "move" : "draw",
      startX: x,
      startY: y,
      lastX: x,
      lastY: y,
      boxId: hit?.box_id ?? null,
      moved: false,
    };
  }

  private onMouseMove(e: MouseEvent): void {
    if (!this.drag) return;
    const { x, y } = this.stagePoint(e);
    if (
      Math.abs(x - this.drag.startX) >= CLICK_SLOP_PX ||
      Math.abs(y - this.drag.startY) >= CLICK_SLOP_PX
    ) {
      this.drag.moved = true;
    }
    this.drag.lastX = x;
    this.drag.lastY = y;
    this.render();
  }

  private onMouseUp(e: MouseEvent): void {
    const drag = this.drag;
    this.drag = null;
    if (!drag) return;
    const { x, y } = this.stagePoint(e);

    if (drag.kind === "draw") {
      if (drag.moved) {
        const left = Math.round(Math.min(drag.startX, x));
        const top = Math.round(Math.min(drag.startY, y));
        const width = Math.round(Math.abs(x - drag.startX));
        const height = Math.round(Math.abs(y - drag.startY));
        this.drawBox(left, top, width, height);
      } else if (this.selection.size > 0) {
        this.selection.clear(); // plain click on empty space clears selection
        this.render();
      }
      return;
    }

    // Press started on a box.
    if (!drag.moved) {
      this.cycleCategory(drag.boxId!);
      return;
    }
    const dx = Math.round(x - drag.startX);
    const dy = Math.round(y - drag.startY);
    const targets =
      this.selection.size > 0 && this.selection.has(drag.boxId!)
        ? new Set(this.selection)
        : new Set([drag.boxId!]);
    this.translateBoxes(targets, dx, dy);
  }

  // -- rendering ------------------------------------------------------------------

  async loadFrameImage(frame: number): Promise<void> {
    let url = this.frameUrls.get(frame);
    if (!url) {
      try {
        const blob = await this.api.fetchFrameBlob(this.videoId, frame);
        url = URL.createObjectURL(blob);
        this.frameUrls.set(frame, url);
      } catch {
        return; // headless test environments have no object URLs
      }
    }
    this.frameImage.src = url;
  }

  setEye(on: boolean): void {
    this.eyeOn = on;
    this.render();
  }

  render(): void {
    const children: HTMLElement[] = [];
    // Live preview offset while dragging boxes around.
    let dragDx = 0;
    let dragDy = 0;
    let dragTargets: Set<string> | null = null;
    if (this.drag?.kind === "move" && this.drag.moved) {
      dragDx = this.drag.lastX - this.drag.startX;
      dragDy = this.drag.lastY - this.drag.startY;
      dragTargets =
        this.selection.size > 0 && this.selection.has(this.drag.boxId!)
          ? this.selection
          : new Set([this.drag.boxId!]);
    }
    if (this.eyeOn) {
      for (const b of this.boxesOn(this.currentFrame)) {
        const dragged = dragTargets?.has(b.box_id) ?? false;
        const el = document.createElement("div");
        el.className = "bbox";
        el.dataset.boxId = b.box_id;
        el.dataset.category = b.category;
        el.style.position = "absolute";
        el.style.left = `${b.x + (dragged ? dragDx : 0)}px`;
        el.style.top = `${b.y + (dragged ? dragDy : 0)}px`;
        el.style.width = `${b.width}px`;
        el.style.height = `${b.height}px`;
        el.style.border = `2px solid ${CATEGORY_COLORS[b.category]}`;
        el.style.pointerEvents = "none"; // the stage does its own hit testing
        if (this.selection.has(b.box_id)) el.classList.add("selected");
        children.push(el);
      }
      if (this.drag?.kind === "draw" && this.drag.moved) {
        const el = document.createElement("div");
        el.className = "bbox rubber-band";
        el.style.position = "absolute";
        el.style.left = `${Math.min(this.drag.startX, this.drag.lastX)}px`;
        el.style.top = `${Math.min(this.drag.startY, this.drag.lastY)}px`;
        el.style.width = `${Math.abs(this.drag.lastX - this.drag.startX)}px`;
        el.style.height = `${Math.abs(this.drag.lastY - this.drag.startY)}px`;
        el.style.pointerEvents = "none";
        children.push(el);
      }
    }
    this.overlay.replaceChildren(...children);
    this.onChange?.();
  }
}
