// Event feed with graceful degradation: prefer the server-sent event
// stream, fall back to polling while it is down, and keep trying to get
// the stream back. Sources and timers are injected for testability.

import type { ConnectionStatus, ConsoleEvent } from "./types.js";

export interface EventSourceLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export interface Scheduler {
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

export interface FeedOptions {
  createSource: () => EventSourceLike;
  poll: () => Promise<boolean>; // recovers state; resolves false on failure
  onEvent: (event: ConsoleEvent) => void;
  onStatus: (status: ConnectionStatus) => void;
  scheduler?: Scheduler;
  pollIntervalMs?: number;
}

export class EventFeed {
  private source: EventSourceLike | null = null;
  private pollTimer: number | null = null;
  private status: ConnectionStatus | null = null;
  private scheduler: Scheduler;
  private pollIntervalMs: number;
  private stopped = false;

  constructor(private opts: FeedOptions) {
    this.scheduler = opts.scheduler ?? {
      setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
      clearInterval: (id) => clearInterval(id),
    };
    this.pollIntervalMs = opts.pollIntervalMs ?? 2000;
  }

  start(): void {
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.source?.close();
    this.source = null;
    this.stopPolling();
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.opts.onStatus(status);
    }
  }

  private connect(): void {
    if (this.stopped) {
      return;
    }
    const source = this.opts.createSource();
    this.source = source;
    source.onopen = () => {
      this.setStatus("live");
      this.stopPolling();
    };
    source.onmessage = (ev) => {
      this.setStatus("live");
      this.stopPolling();
      try {
        this.opts.onEvent(JSON.parse(ev.data) as ConsoleEvent);
      } catch {
        // comment/keep-alive lines are not JSON; EventSource filters most
      }
    };
    source.onerror = () => {
      source.close();
      if (this.source === source) {
        this.source = null;
      }
      this.startPolling();
      // the browser EventSource reconnects itself; ours is recreated on a timer
      this.scheduleReconnect();
    };
  }

  private reconnectTimer: number | null = null;

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null || this.stopped) {
      return;
    }
    this.reconnectTimer = this.scheduler.setInterval(() => {
      if (this.reconnectTimer !== null) {
        this.scheduler.clearInterval(this.reconnectTimer);
        this.reconnectTimer = null;
      }
      if (this.source === null) {
        this.connect();
      }
    }, this.pollIntervalMs * 2);
  }

  private startPolling(): void {
    if (this.pollTimer !== null || this.stopped) {
      return;
    }
    this.setStatus("polling");
    const tick = () => {
      void this.opts.poll().then((ok) => {
        if (!ok) {
          this.setStatus("lost");
        } else if (this.source === null) {
          this.setStatus("polling");
        }
      });
    };
    tick();
    this.pollTimer = this.scheduler.setInterval(tick, this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      this.scheduler.clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
