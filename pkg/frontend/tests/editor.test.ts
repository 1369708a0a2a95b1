import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { SubmissionEditor } from "../src/editor.js";
import type { Box } from "../src/types.js";
import { FakeServer } from "./fake_server.js";

let server: FakeServer;

beforeEach(() => {
  server = new FakeServer();
  vi.stubGlobal("fetch", server.fetch);
});

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

async function makeEditor(mode: "Label" | "Review" = "Label", reviewed?: string) {
  const api = new ApiClient();
  await api.login("alice", "pw-a");
  const state = await api.createSubmission(mode, server.segmentId, reviewed);
  const stage = document.createElement("div");
  document.body.append(stage);
  return new SubmissionEditor(api, state, stage);
}

function mouse(
  el: HTMLElement,
  type: string,
  x: number,
  y: number,
  opts: MouseEventInit = {},
) {
  el.dispatchEvent(
    new MouseEvent(type, { clientX: x, clientY: y, bubbles: true, ...opts }),
  );
}

function dragOn(el: HTMLElement, x0: number, y0: number, x1: number, y1: number,
                opts: MouseEventInit = {}) {
  mouse(el, "mousedown", x0, y0, opts);
  mouse(el, "mousemove", x1, y1, opts);
  mouse(el, "mouseup", x1, y1, opts);
}

function clickAt(el: HTMLElement, x: number, y: number, opts: MouseEventInit = {}) {
  mouse(el, "mousedown", x, y, opts);
  mouse(el, "mouseup", x, y, opts);
}

function serverBoxes(frame = 0): Box[] {
  const sub = [...server.submissions.values()][0];
  return sub.state.frames[String(frame)] ?? [];
}

describe("drawing", () => {
  it("drag on empty canvas creates an Animal box on the server", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 12, 40, 36);
    await editor.flush();

    const boxes = serverBoxes();
    expect(boxes).toHaveLength(1);
    expect(boxes[0]).toMatchObject({
      x: 10, y: 12, width: 30, height: 24, category: "Animal", origin: "Drawn",
      author_id: "alice",
    });
  });

  it("rejects boxes below the minimum size client-side", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 12, 12); // 2x2, below the 4 px filter
    await editor.flush();

    expect(serverBoxes()).toHaveLength(0);
    expect(server.requestsTo("/events")).toHaveLength(0); // nothing even sent
  });

  it("autosaves within a second of a change", async () => {
    vi.useFakeTimers();
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 30, 30);
    expect(server.requestsTo("/events")).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(1000);
    expect(server.requestsTo("/events")).toHaveLength(1);
    expect(serverBoxes()).toHaveLength(1);
  });
});

describe("category cycling", () => {
  it("click cycles Animal -> Human -> Animal, verified on the server", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    clickAt(stage, 20, 20);
    await editor.flush();
    expect(serverBoxes()[0].category).toBe("Human");

    clickAt(stage, 20, 20);
    await editor.flush();
    expect(serverBoxes()[0].category).toBe("Animal");
  });

  it("renders category colors per the contract", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    let el = stage.querySelector(".bbox") as HTMLElement;
    expect(el.style.border).toContain("red");
    clickAt(stage, 20, 20);
    el = stage.querySelector(".bbox") as HTMLElement;
    expect(el.style.border).toContain("blue");
  });
});

describe("deletion and selection", () => {
  it("SHIFT+click deletes the box on the server", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    await editor.flush();
    expect(serverBoxes()).toHaveLength(1);

    clickAt(stage, 20, 20, { shiftKey: true });
    await editor.flush();
    expect(serverBoxes()).toHaveLength(0);
  });

  it("CTRL+click toggles selection without touching geometry", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    dragOn(stage, 60, 60, 90, 90);
    await editor.flush();
    const before = serverBoxes().map((b) => ({ ...b }));

    clickAt(stage, 20, 20, { ctrlKey: true });
    clickAt(stage, 70, 70, { ctrlKey: true });
    expect(editor.selection.size).toBe(2);
    clickAt(stage, 70, 70, { ctrlKey: true });
    expect(editor.selection.size).toBe(1);
    await editor.flush();
    expect(serverBoxes()).toEqual(before);
  });

  it("dragging a multi-selection translates every selected box rigidly", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 30, 30);
    dragOn(stage, 60, 60, 80, 80);
    dragOn(stage, 100, 100, 120, 130);
    await editor.flush();

    clickAt(stage, 15, 15, { ctrlKey: true });
    clickAt(stage, 65, 65, { ctrlKey: true });
    // Drag one selected box by (+5, +7); the other follows, the third stays.
    dragOn(stage, 15, 15, 20, 22);
    await editor.flush();

    const boxes = serverBoxes();
    expect(boxes.map((b) => [b.x, b.y])).toEqual([
      [15, 17],
      [65, 67],
      [100, 100],
    ]);
    // Rigid: widths/heights untouched.
    expect(boxes.map((b) => [b.width, b.height])).toEqual([
      [20, 20],
      [20, 20],
      [20, 30],
    ]);
  });

  it("dragging an unselected box moves only that box", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 30, 30);
    dragOn(stage, 60, 60, 80, 80);
    dragOn(stage, 15, 15, 25, 15); // move first box +10 x
    await editor.flush();
    expect(serverBoxes().map((b) => [b.x, b.y])).toEqual([
      [20, 10],
      [60, 60],
    ]);
  });
});

describe("navigation and propagation", () => {
  it("first forward visit propagates boxes; revisits do not", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    const created = await editor.forward();
    expect(created).toHaveLength(1);
    expect(editor.currentFrame).toBe(1);

    await editor.backward();
    const again = await editor.forward();
    expect(again).toHaveLength(0);
    expect(editor.boxesOn(1)).toHaveLength(1);
  });

  it("review mode never triggers propagation requests", async () => {
    // Alice labels and submits; bob reviews.
    const alice = new ApiClient();
    await alice.login("alice", "pw-a");
    const labeled = await alice.createSubmission("Label", server.segmentId);
    await alice.postEvents(labeled.submission_id, [
      {
        sequence_no: 0,
        kind: "BoxDrawn",
        payload: {
          frame: 0,
          box: {
            box_id: "a0", frame_index: 0, x: 10, y: 10, width: 20, height: 20,
            category: "Animal", origin: "Drawn", author_id: "alice",
          },
        },
      },
    ]);
    await alice.submit(labeled.submission_id);

    const bob = new ApiClient();
    await bob.login("bob", "pw-b");
    const reviewState = await bob.createSubmission(
      "Review", server.segmentId, labeled.submission_id,
    );
    const stage = document.createElement("div");
    document.body.append(stage);
    const editor = new SubmissionEditor(bob, reviewState, stage);
    expect(editor.boxesOn(0)).toHaveLength(1); // displays the existing labels

    server.requests = [];
    const created = await editor.forward();
    expect(created).toHaveLength(0);
    const advance = server.requestsTo("/advance");
    expect(advance).toHaveLength(1);
    expect(advance[0].body.tracker_enabled).toBe(false);
    expect(editor.boxesOn(1)).toHaveLength(0);
  });

  it("copy toggle forces plain copies; slider enables tracking", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);

    editor.copyMode = true;
    await editor.forward();
    let advance = server.requestsTo("/advance");
    expect(advance[0].body.tracker_enabled).toBe(false);

    editor.copyMode = false;
    editor.trackerBuffer = 12;
    await editor.forward();
    advance = server.requestsTo("/advance");
    expect(advance[1].body.tracker_enabled).toBe(true);
    expect(advance[1].body.buffer).toBe(12);
  });

  it("forward at the last frame is a no-op", async () => {
    const editor = await makeEditor();
    await editor.goTo(server.frameCount - 1);
    server.requests = [];
    await editor.forward();
    expect(server.requestsTo("/advance")).toHaveLength(0);
  });
});

describe("eye toggle", () => {
  it("hides boxes without mutating state", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    await editor.flush();
    const before = JSON.stringify(serverBoxes());
    expect(stage.querySelectorAll(".bbox")).toHaveLength(1);

    editor.setEye(false);
    expect(stage.querySelectorAll(".bbox")).toHaveLength(0);

    editor.setEye(true);
    expect(stage.querySelectorAll(".bbox")).toHaveLength(1);
    await editor.flush();
    expect(JSON.stringify(serverBoxes())).toBe(before);
    expect(server.requestsTo("/events").length).toBe(1); // only the draw
  });
});

describe("undo", () => {
  it("restores the frame to its entry snapshot from the server", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    await editor.forward(); // frame 1 now holds one propagated box (snapshot)
    dragOn(stage, 100, 100, 140, 140);
    dragOn(stage, 150, 150, 190, 190);
    expect(editor.boxesOn(1)).toHaveLength(3);

    await editor.undoCurrentFrame();
    expect(editor.boxesOn(1)).toHaveLength(1);
    expect(editor.boxesOn(1)[0].box_id).toContain("@1");
    expect(serverBoxes(1)).toHaveLength(1);
  });
});

describe("reload", () => {
  it("renders the server state exactly after a fresh load", async () => {
    const editor = await makeEditor();
    const stage = editor["stage"] as HTMLElement;
    dragOn(stage, 10, 10, 40, 40);
    dragOn(stage, 60, 60, 90, 96);
    clickAt(stage, 70, 70); // cycle second box to Human
    await editor.forward();
    await editor.flush();

    // Browser closed and re-opened: new client, state comes from GET.
    const api2 = new ApiClient();
    await api2.login("alice", "pw-a");
    const reloaded = await api2.getSubmission(editor.state.submission_id);
    const stage2 = document.createElement("div");
    document.body.append(stage2);
    const editor2 = new SubmissionEditor(api2, reloaded, stage2);

    expect(editor2.state.frames).toEqual(
      JSON.parse(JSON.stringify(serverBoxesAll())),
    );
    const rendered = [...stage2.querySelectorAll(".bbox")].map((el) => ({
      id: (el as HTMLElement).dataset.boxId,
      category: (el as HTMLElement).dataset.category,
      left: (el as HTMLElement).style.left,
      top: (el as HTMLElement).style.top,
    }));
    expect(rendered).toEqual(
      serverBoxes(0).map((b) => ({
        id: b.box_id,
        category: b.category,
        left: `${b.x}px`,
        top: `${b.y}px`,
      })),
    );
  });
});

function serverBoxesAll() {
  const sub = [...server.submissions.values()][0];
  return sub.state.frames;
}
