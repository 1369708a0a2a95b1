import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { SubmissionEditor } from "../src/editor.js";
import { PlaybackController } from "../src/player.js";
import { Toolbar } from "../src/toolbar.js";
import { FakeServer } from "./fake_server.js";

let server: FakeServer;

beforeEach(() => {
  document.body.replaceChildren();
  server = new FakeServer();
  vi.stubGlobal("fetch", server.fetch);
});

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
});

async function setup() {
  const api = new ApiClient();
  await api.login("alice", "pw-a");
  const state = await api.createSubmission("Label", server.segmentId);
  const stage = document.createElement("div");
  const toolbarRoot = document.createElement("div");
  document.body.append(stage, toolbarRoot);
  const editor = new SubmissionEditor(api, state, stage);
  const player = new PlaybackController(editor);
  const toolbar = new Toolbar(editor, player, toolbarRoot);
  return { api, editor, player, toolbar, toolbarRoot, stage };
}

function click(root: HTMLElement, selector: string) {
  const el = root.querySelector(selector) as HTMLElement;
  expect(el).toBeTruthy();
  el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

function drawBoxOn(stage: HTMLElement) {
  for (const [type, x, y] of [
    ["mousedown", 10, 10],
    ["mousemove", 40, 40],
    ["mouseup", 40, 40],
  ] as const) {
    stage.dispatchEvent(new MouseEvent(type, { clientX: x, clientY: y, bubbles: true }));
  }
}

describe("confirmations", () => {
  it("cancel on the trash can sends nothing", async () => {
    const { toolbarRoot } = await setup();
    server.requests = [];
    click(toolbarRoot, ".trash");
    expect(document.querySelector(".modal")).toBeTruthy();
    click(document.body, ".modal-cancel");
    await Promise.resolve();
    expect(server.requests).toHaveLength(0);
    expect(document.querySelector(".modal")).toBeNull();
  });

  it("confirmed delete reaches the server with confirm=true", async () => {
    const { toolbarRoot, editor } = await setup();
    let deleted = false;
    (toolbarRoot as any); // toolbar is wired in setup
    click(toolbarRoot, ".trash");
    click(document.body, ".modal-confirm");
    await vi.waitFor(() => {
      expect(editor.state.status).toBe("Deleted");
    });
    const req = server.requestsTo("/api/submissions/")
      .find((r) => r.method === "DELETE");
    expect(req).toBeTruthy();
    expect(req!.path).toContain("confirm=true");
    deleted = editor.state.status === "Deleted";
    expect(deleted).toBe(true);
  });

  it("submit asks for confirmation and carries confirm=true", async () => {
    const { toolbarRoot, editor } = await setup();
    click(toolbarRoot, ".submit");
    expect(editor.state.status).toBe("InProgress"); // modal open, nothing sent
    click(document.body, ".modal-confirm");
    await vi.waitFor(() => {
      expect(editor.state.status).toBe("Submitted");
    });
    const req = server.requestsTo("/submit")[0];
    expect(req.path).toContain("confirm=true");
  });

  it("unconfirmed undo sends no event", async () => {
    const { toolbarRoot, stage } = await setup();
    drawBoxOn(stage);
    server.requests = [];
    click(toolbarRoot, ".undo");
    click(document.body, ".modal-cancel");
    await Promise.resolve();
    expect(server.requestsTo("/events")).toHaveLength(0);
  });

  it("confirmed undo restores the entry snapshot", async () => {
    const { toolbarRoot, stage, editor } = await setup();
    drawBoxOn(stage);
    expect(editor.boxesOn(0)).toHaveLength(1);
    click(toolbarRoot, ".undo");
    click(document.body, ".modal-confirm");
    await vi.waitFor(() => {
      expect(editor.boxesOn(0)).toHaveLength(0); // frame 0 entered empty
    });
  });
});

describe("toolbar state", () => {
  it("shows progress through the video", async () => {
    const { toolbarRoot, editor } = await setup();
    const progress = toolbarRoot.querySelector(".progress")!;
    expect(progress.textContent).toBe("0%");
    await editor.goTo(server.frameCount - 1);
    expect(progress.textContent).toBe("100%");
  });

  it("copy toggle flips copy mode", async () => {
    const { toolbarRoot, editor } = await setup();
    expect(editor.copyMode).toBe(false);
    click(toolbarRoot, ".copy-toggle");
    expect(editor.copyMode).toBe(true);
    expect(toolbarRoot.querySelector(".copy-toggle")!.classList.contains("active")).toBe(true);
  });

  it("slider drives the tracker buffer within range", async () => {
    const { toolbarRoot, editor } = await setup();
    const slider = toolbarRoot.querySelector(".tracker-slider") as HTMLInputElement;
    expect(slider.max).toBe("50");
    slider.value = "23";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    expect(editor.trackerBuffer).toBe(23);
  });

  it("eye button toggles box display", async () => {
    const { toolbarRoot, stage, editor } = await setup();
    drawBoxOn(stage);
    expect(stage.querySelectorAll(".bbox")).toHaveLength(1);
    click(toolbarRoot, ".eye-toggle");
    expect(stage.querySelectorAll(".bbox")).toHaveLength(0);
    expect(editor.eyeOn).toBe(false);
  });

  it("help opens a control summary", async () => {
    const { toolbarRoot } = await setup();
    click(toolbarRoot, ".help");
    const modal = document.querySelector(".help-modal");
    expect(modal).toBeTruthy();
    expect(modal!.textContent).toContain("SHIFT+click deletes a box");
    click(document.body, ".modal-cancel");
    expect(document.querySelector(".help-modal")).toBeNull();
  });

  it("play button reflects playback state", async () => {
    const { toolbarRoot, player } = await setup();
    vi.useFakeTimers();
    click(toolbarRoot, ".play");
    expect(player.playing).toBe(true);
    expect(toolbarRoot.querySelector(".play")!.textContent).toBe("⏸");
    click(toolbarRoot, ".play");
    expect(player.playing).toBe(false);
  });
});
