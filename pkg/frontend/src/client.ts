// Service client: telemetry socket with auto-reconnect, plus the HTTP
// endpoints. The socket factory is injectable so tests can drive a fake.

import { Backoff } from "./backoff.js";
import { parseFrame, parseTrack, JournalEntry, TelemetryFrame, TrackGeometry } from "./types.js";

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TelemetryEvents {
  onFrame: (frame: TelemetryFrame) => void;
  onStatus: (connected: boolean) => void;
}

export class TelemetryClient {
  private socket: SocketLike | null = null;
  private backoff = new Backoff();
  private closed = false;
  frames = 0;

  constructor(
    private readonly url: string,
    private readonly events: TelemetryEvents,
    private readonly factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
    private readonly schedule: (fn: () => void, ms: number) => void = (fn, ms) => setTimeout(fn, ms),
  ) {}

  connect(): void {
    if (this.closed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff.reset();
      this.events.onStatus(true);
    };
    socket.onclose = () => {
      this.events.onStatus(false);
      if (!this.closed) {
        this.schedule(() => this.connect(), this.backoff.nextDelay());
      }
    };
    socket.onmessage = (message) => {
      let raw: unknown;
      try {
        raw = JSON.parse(message.data);
      } catch {
        return; // drop malformed frames
      }
      const frame = parseFrame(raw);
      if (frame) {
        this.frames += 1;
        this.events.onFrame(frame);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}

export async function postPrompt(base: string, text: string): Promise<boolean> {
  const response = await fetch(`${base}/prompt`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ text }),
  });
  if (!response.ok) return false;
  const body = (await response.json()) as { ok?: boolean };
  return body.ok === true;
}

export async function fetchTrack(base: string): Promise<TrackGeometry | null> {
  const response = await fetch(`${base}/track`);
  if (!response.ok) return null;
  return parseTrack(await response.json());
}

export async function fetchJournal(base: string): Promise<JournalEntry[]> {
  const response = await fetch(`${base}/journal`);
  if (!response.ok) return [];
  const body = (await response.json()) as { params?: JournalEntry[] };
  return body.params ?? [];
}
