// Reconnect backoff: exponential with a cap, reset on success.

export class Backoff {
  private attempts = 0;

  constructor(private readonly baseMs = 500, private readonly maxMs = 8000) {}

  nextDelay(): number {
    const delay = Math.min(this.baseMs * 2 ** this.attempts, this.maxMs);
    this.attempts += 1;
    return delay;
  }

  reset(): void {
    this.attempts = 0;
  }
}
