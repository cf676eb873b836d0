// Console wiring: telemetry socket -> track view + readouts; prompt box ->
// POST /prompt with the single-in-flight queue; journal polling -> diff
// panel and decision feed.

import { TelemetryClient, fetchJournal, fetchTrack, postPrompt } from "./client.js";
import { diffRows, formatDiff } from "./diff.js";
import { PromptQueue } from "./feed.js";
import { TrackView, readouts } from "./render.js";
import { JournalEntry, TelemetryFrame } from "./types.js";

const base = location.origin.replace(/:\d+$/, ":8700");
const wsUrl = base.replace(/^http/, "ws") + "/telemetry";

const canvas = document.getElementById("track") as HTMLCanvasElement;
const statusEl = document.getElementById("status")!;
const readoutEl = document.getElementById("readouts")!;
const promptInput = document.getElementById("prompt") as HTMLInputElement;
const promptButton = document.getElementById("send") as HTMLButtonElement;
const feedEl = document.getElementById("feed")!;
const diffEl = document.getElementById("diffs")!;

let view: TrackView | null = null;
let latest: TelemetryFrame | null = null;
let lastDecisionSeen: string | null = null;
let journalCursor = 0;
let previousApplied: Record<string, number> | null = null;

const queue = new PromptQueue((text) => postPrompt(base, text));

function renderFeed(): void {
  feedEl.innerHTML = "";
  for (const entry of queue.entries.slice(-14).reverse()) {
    const div = document.createElement("div");
    div.className = `feed-${entry.kind}`;
    const stamp = entry.t !== null ? `[${entry.t.toFixed(1)}s] ` : "";
    div.textContent = `${stamp}${entry.kind}: ${entry.text}`;
    feedEl.appendChild(div);
  }
  promptButton.disabled = promptInput.value.trim().length === 0;
}

async function pollJournal(): Promise<void> {
  const entries: JournalEntry[] = await fetchJournal(base);
  while (journalCursor < entries.length) {
    const entry = entries[journalCursor];
    const rows = diffRows(entry, previousApplied);
    queue.pushParamDiff(`${entry.source}: ${formatDiff(rows)}`, entry.t);
    diffEl.textContent = formatDiff(rows);
    previousApplied = entry.applied;
    journalCursor += 1;
  }
  renderFeed();
}

const client = new TelemetryClient(wsUrl, {
  onFrame: (frame) => {
    latest = frame;
    readoutEl.textContent = readouts(frame);
    if (frame.last_decision && frame.last_decision !== lastDecisionSeen) {
      lastDecisionSeen = frame.last_decision;
      void queue.onCycleObserved(frame.last_decision, frame.t).then(renderFeed);
      void pollJournal();
    }
  },
  onStatus: (connected) => {
    statusEl.textContent = connected ? "connected" : "disconnected - reconnecting...";
    statusEl.className = connected ? "ok" : "bad";
  },
});

async function start(): Promise<void> {
  const track = await fetchTrack(base);
  if (!track) {
    statusEl.textContent = "service unreachable (is `langdrive serve` running?)";
    statusEl.className = "bad";
    setTimeout(start, 2000);
    return;
  }
  view = new TrackView(canvas, track);
  client.connect();
  function loop(): void {
    view!.draw(latest);
    requestAnimationFrame(loop);
  }
  loop();
  void pollJournal();
}

// prompt history survives reloads; everything else converges from the server
const HISTORY_KEY = "langdrive.prompt.history";

function loadHistory(): string[] {
  try {
    return JSON.parse(localStorage.getItem(HISTORY_KEY) ?? "[]") as string[];
  } catch {
    return [];
  }
}

function saveHistory(text: string): void {
  const history = loadHistory().filter((item) => item !== text);
  history.unshift(text);
  localStorage.setItem(HISTORY_KEY, JSON.stringify(history.slice(0, 20)));
  renderHistory();
}

function renderHistory(): void {
  const list = document.getElementById("prompt-history") as HTMLDataListElement;
  list.innerHTML = "";
  for (const item of loadHistory()) {
    const option = document.createElement("option");
    option.value = item;
    list.appendChild(option);
  }
}

promptButton.addEventListener("click", () => {
  const text = promptInput.value;
  void queue.submit(text).then(() => {
    if (text.trim()) saveHistory(text.trim());
    promptInput.value = "";
    renderFeed();
  });
});
promptInput.addEventListener("input", renderFeed);
promptInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && promptInput.value.trim()) promptButton.click();
});

renderFeed();
renderHistory();
void start();
