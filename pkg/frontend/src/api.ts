// Thin typed client over the documented endpoints. The fetch function is
// injected so tests can replay flows against a recorded backend.

import type { AppSummary, ChatResponse, HomeState } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
    private base: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as T;
  }

  chat(sessionId: string, text: string): Promise<ChatResponse> {
    return this.request<ChatResponse>("POST", "/api/chat", {
      session_id: sessionId,
      text,
    });
  }

  homeState(): Promise<HomeState> {
    return this.request<HomeState>("GET", "/api/home/state");
  }

  toggleRelay(relayId: string, on: boolean): Promise<unknown> {
    return this.request("POST", `/api/home/actuators/${encodeURIComponent(relayId)}`, { on });
  }

  listApps(): Promise<AppSummary[]> {
    return this.request<AppSummary[]>("GET", "/api/apps");
  }
}
