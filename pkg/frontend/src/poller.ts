// Polling with coalescing: at most one request in flight per view. A fetch
// failure raises the stale flag but keeps the last good value on screen.

export class Poller<T> {
  public value: T | null = null;
  public stale = false;
  public lastError: string | null = null;
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly fetchValue: () => Promise<T>,
    public readonly intervalMs: number = 2000,
    private readonly onUpdate: (value: T) => void = () => {},
  ) {}

  /** One poll cycle; overlapping ticks coalesce into the in-flight one. */
  async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      this.value = await this.fetchValue();
      this.stale = false;
      this.lastError = null;
      this.onUpdate(this.value);
    } catch (err) {
      this.stale = true;
      this.lastError = err instanceof Error ? err.message : String(err);
    } finally {
      this.inFlight = false;
    }
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
