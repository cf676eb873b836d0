import { describe, expect, it } from "vitest";

import { SocketLike, TelemetryClient } from "../src/client.js";
import { Backoff } from "../src/backoff.js";
import { TelemetryFrame } from "../src/types.js";

class FakeSocket implements SocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  closed = false;
  close(): void {
    this.closed = true;
  }
}

const frame = {
  t: 0.1, s: 1, n: 0, delta_phi: 0, v: 2, delta: 0,
  d_left: 1.3, d_right: 1.3, crashed: false, x: 0, y: 0, heading: 0,
  params_hash: "h", last_decision: null, last_update: null,
};

function harness() {
  const sockets: FakeSocket[] = [];
  const pending: Array<() => void> = [];
  const frames: TelemetryFrame[] = [];
  const statuses: boolean[] = [];
  const client = new TelemetryClient(
    "ws://test/telemetry",
    { onFrame: (f) => frames.push(f), onStatus: (s) => statuses.push(s) },
    () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    (fn) => pending.push(fn),
  );
  return { client, sockets, pending, frames, statuses };
}

describe("TelemetryClient", () => {
  it("delivers parsed frames and counts them", () => {
    const { client, sockets, frames } = harness();
    client.connect();
    sockets[0].onopen!();
    sockets[0].onmessage!({ data: JSON.stringify(frame) });
    sockets[0].onmessage!({ data: "not json" });
    sockets[0].onmessage!({ data: JSON.stringify({ garbage: true }) });
    expect(frames.length).toBe(1);
    expect(client.frames).toBe(1);
  });

  it("reconnects with backoff after a disconnect", () => {
    const { client, sockets, pending, statuses } = harness();
    client.connect();
    sockets[0].onopen!();
    sockets[0].onclose!();
    expect(statuses).toEqual([true, false]);
    expect(pending.length).toBe(1);
    pending.shift()!(); // fire the scheduled reconnect
    expect(sockets.length).toBe(2);
    sockets[1].onopen!();
    expect(statuses.at(-1)).toBe(true);
  });

  it("stops reconnecting once closed", () => {
    const { client, sockets, pending } = harness();
    client.connect();
    client.close();
    sockets[0].onclose!();
    expect(pending.length).toBe(0);
  });
});

describe("Backoff", () => {
  it("doubles up to the cap and resets", () => {
    const backoff = new Backoff(100, 800);
    expect(backoff.nextDelay()).toBe(100);
    expect(backoff.nextDelay()).toBe(200);
    expect(backoff.nextDelay()).toBe(400);
    expect(backoff.nextDelay()).toBe(800);
    expect(backoff.nextDelay()).toBe(800);
    backoff.reset();
    expect(backoff.nextDelay()).toBe(100);
  });
});
