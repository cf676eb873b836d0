// Fixed-capacity ring buffer for the trailing trajectory trace.

export interface TracePoint {
  x: number;
  y: number;
}

export class Trace {
  private buffer: TracePoint[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("trace capacity must be >= 1");
    this.buffer = new Array(capacity);
  }

  push(point: TracePoint): void {
    this.buffer[this.head] = point;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count += 1;
  }

  get length(): number {
    return this.count;
  }

  // oldest to newest
  points(): TracePoint[] {
    const out: TracePoint[] = [];
    const start = (this.head - this.count + this.capacity) % this.capacity;
    for (let i = 0; i < this.count; i++) {
      out.push(this.buffer[(start + i) % this.capacity]);
    }
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}
