/**
 * Feedback delivery with an offline queue: a failed POST parks the record
 * and retries on a timer until the backend comes back.
 */

import type { FeedbackRecord } from './api.js';

type Poster = (record: FeedbackRecord) => Promise<unknown>;

export class FeedbackQueue {
  private queue: FeedbackRecord[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly post: Poster,
    private readonly retryDelayMs = 3000,
    private readonly onChange: (pending: number) => void = () => {},
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  /** Try to deliver now; on failure the record is queued for retry.
   *  While older records are pending, new ones queue behind them so
   *  delivery order always matches submission order. */
  async send(record: FeedbackRecord): Promise<boolean> {
    if (this.queue.length > 0) {
      this.queue.push(record);
      this.onChange(this.queue.length);
      this.schedule();
      return false;
    }
    try {
      await this.post(record);
      return true;
    } catch {
      this.queue.push(record);
      this.onChange(this.queue.length);
      this.schedule();
      return false;
    }
  }

  private schedule(): void {
    if (this.timer !== null) {
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.retryDelayMs);
  }

  /** Deliver queued records in order; stops at the first failure. */
  async flush(): Promise<void> {
    while (this.queue.length > 0) {
      try {
        await this.post(this.queue[0]);
        this.queue.shift();
        this.onChange(this.queue.length);
      } catch {
        this.schedule();
        return;
      }
    }
  }
}
