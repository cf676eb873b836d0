// Prompt submission with a single-in-flight contract: while one decision
// cycle is pending, further submissions queue; the next one posts once the
// feed observes the pending cycle's outcome.

export interface FeedEntry {
  kind: "prompt" | "decision" | "params" | "error";
  text: string;
  t: number | null;
}

export type PostPrompt = (text: string) => Promise<boolean>;

export class PromptQueue {
  private pending: string | null = null;
  private queued: string[] = [];
  readonly entries: FeedEntry[] = [];

  constructor(private readonly post: PostPrompt, private readonly maxEntries = 200) {}

  get inFlight(): string | null {
    return this.pending;
  }

  get backlog(): number {
    return this.queued.length;
  }

  async submit(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed) return;
    if (this.pending !== null) {
      this.queued.push(trimmed);
      return;
    }
    await this.dispatch(trimmed);
  }

  private async dispatch(text: string): Promise<void> {
    this.pending = text;
    this.push({ kind: "prompt", text, t: null });
    let ok = false;
    try {
      ok = await this.post(text);
    } catch {
      ok = false;
    }
    if (!ok) {
      this.push({ kind: "error", text: `failed to submit: ${text}`, t: null });
      this.pending = null;  // keep the text in the box for retry, free the lane
    }
  }

  // called when a telemetry frame or journal poll reports a completed cycle
  async onCycleObserved(summary: string, t: number): Promise<void> {
    if (this.pending === null) return;
    this.push({ kind: "decision", text: summary, t });
    this.pending = null;
    const next = this.queued.shift();
    if (next !== undefined) {
      await this.dispatch(next);
    }
  }

  pushParamDiff(text: string, t: number): void {
    this.push({ kind: "params", text, t });
  }

  private push(entry: FeedEntry): void {
    this.entries.push(entry);
    if (this.entries.length > this.maxEntries) {
      this.entries.splice(0, this.entries.length - this.maxEntries);
    }
  }
}
