// DOM glue: wires the reducers, renderers, API client and event feed to
// the page. All behavior lives in the imported modules; this file only
// moves data between them and the document.

import { ApiClient, ApiError } from "./api.js";
import {
  addReply,
  addUserMessage,
  applyActuatorEvent,
  applyHomeState,
  applyReadingEvent,
  isStale,
  markLastUserMessageFailed,
  newChatState,
  newDashboardState,
  rollbackRelay,
  setConnection,
  toggleOptimistic,
  POLL_INTERVAL_MS,
} from "./state.js";
import { renderChat, renderDashboard } from "./render.js";
import { EventFeed } from "./stream.js";
import type { EventSourceLike } from "./stream.js";
import type { ChatState, DashboardState } from "./state.js";
import type { ConsoleEvent } from "./types.js";

const api = new ApiClient();
let chat: ChatState = newChatState(crypto.randomUUID());
let dashboard: DashboardState = newDashboardState();

const chatLog = document.getElementById("chat-log") as HTMLElement;
const chatInput = document.getElementById("chat-input") as HTMLInputElement;
const chatForm = document.getElementById("chat-form") as HTMLFormElement;
const dashboardEl = document.getElementById("dashboard") as HTMLElement;
const appsEl = document.getElementById("apps") as HTMLElement;

function redrawChat(): void {
  chatLog.innerHTML = renderChat(chat);
  chatLog.scrollTop = chatLog.scrollHeight;
}

function redrawDashboard(): void {
  dashboardEl.innerHTML = renderDashboard(dashboard, Date.now(), isStale(dashboard, Date.now()));
  for (const button of dashboardEl.querySelectorAll<HTMLButtonElement>("button.relay")) {
    button.addEventListener("click", () => {
      const relay = button.dataset.relay;
      if (relay) {
        void toggleRelay(relay);
      }
    });
  }
}

async function sendChat(text: string): Promise<void> {
  chat = addUserMessage(chat, text, Date.now());
  redrawChat();
  try {
    const reply = await api.chat(chat.sessionId, text);
    chat = addReply(chat, reply, Date.now());
  } catch (err) {
    // keep the text in the input so nothing is lost; Enter retries
    chat = markLastUserMessageFailed(chat);
    chatInput.value = text;
    console.error("chat failed", err);
  }
  redrawChat();
}

async function toggleRelay(relay: string): Promise<void> {
  const previous = dashboard.relays[relay] ?? false;
  dashboard = toggleOptimistic(dashboard, relay, !previous);
  redrawDashboard();
  try {
    await api.toggleRelay(relay, !previous);
  } catch (err) {
    dashboard = rollbackRelay(dashboard, relay, previous);
    redrawDashboard();
    showToast(err instanceof ApiError ? `toggle failed: ${err.message}` : "toggle failed");
  }
}

function showToast(message: string): void {
  const toast = document.createElement("div");
  toast.className = "toast";
  toast.textContent = message;
  document.body.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
}

async function pollState(): Promise<boolean> {
  try {
    const home = await api.homeState();
    dashboard = applyHomeState(dashboard, home, Date.now());
    redrawDashboard();
    return true;
  } catch {
    return false;
  }
}

function onEvent(event: ConsoleEvent): void {
  if (event.type === "reading") {
    dashboard = applyReadingEvent(dashboard, event, Date.now());
    redrawDashboard();
  } else if (event.type === "actuator") {
    dashboard = applyActuatorEvent(dashboard, event);
    redrawDashboard();
  }
  // chat events from other sessions are not mirrored into this pane
}

chatForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const text = chatInput.value.trim();
  if (!text) {
    return;
  }
  chatInput.value = "";
  void sendChat(text);
});

const feed = new EventFeed({
  // the runtime shape matches; only the handler `this` typing differs
  createSource: () => new EventSource("/api/events") as unknown as EventSourceLike,
  poll: pollState,
  onEvent,
  onStatus: (status) => {
    dashboard = setConnection(dashboard, status);
    redrawDashboard();
  },
  pollIntervalMs: POLL_INTERVAL_MS,
});

void pollState();
feed.start();
setInterval(redrawDashboard, 1000); // refresh the stale badge

void api
  .listApps()
  .then((apps) => {
    appsEl.textContent = apps.length
      ? "apps: " + apps.map((a) => a.name).join(", ")
      : "no apps registered";
  })
  .catch(() => {
    appsEl.textContent = "";
  });
