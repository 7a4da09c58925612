// Pure view-state reducers. Everything the panes display is derived here
// from API payloads, with no smoothing and no client-side invention, so
// the rendering layer stays a dumb template.

import type {
  ActuatorEvent,
  ChatResponse,
  ConnectionStatus,
  HomeState,
  ReadingEvent,
} from "./types.js";

export const POLL_INTERVAL_MS = 2000;
export const PUBLISH_INTERVAL_MS = 2000;
export const STALE_AFTER_MS = 3 * PUBLISH_INTERVAL_MS;

export const UNITS: Record<string, string> = {
  temperature: "°C",
  humidity: "%RH",
  light: "",
};

export interface ChatMessage {
  who: "user" | "dpa";
  text: string;
  ts: number;
  kind?: ChatResponse["reply_kind"];
  command?: Record<string, string> | null;
  failed?: boolean;
}

export interface ChatState {
  sessionId: string;
  messages: ChatMessage[];
  awaitingQuestion: boolean;
}

export function newChatState(sessionId: string): ChatState {
  return { sessionId, messages: [], awaitingQuestion: false };
}

export function addUserMessage(state: ChatState, text: string, ts: number): ChatState {
  return {
    ...state,
    messages: [...state.messages, { who: "user", text, ts }],
  };
}

export function addReply(state: ChatState, reply: ChatResponse, ts: number): ChatState {
  const message: ChatMessage = {
    who: "dpa",
    text: reply.reply_text,
    ts,
    kind: reply.reply_kind,
    command: reply.dispatched_command,
  };
  return {
    ...state,
    messages: [...state.messages, message],
    awaitingQuestion: reply.reply_kind === "question",
  };
}

export function markLastUserMessageFailed(state: ChatState): ChatState {
  const messages = [...state.messages];
  for (let i = messages.length - 1; i >= 0; i--) {
    if (messages[i].who === "user") {
      messages[i] = { ...messages[i], failed: true };
      break;
    }
  }
  return { ...state, messages };
}

export interface SensorCard {
  device: string;
  sensor: string;
  value: number;
  unit: string;
  ts: number;
}

export interface DashboardState {
  cards: Record<string, SensorCard>; // keyed "device/sensor"
  relays: Record<string, boolean>;
  setpoints: Record<string, number | null>;
  connection: ConnectionStatus;
  lastUpdateMs: number | null;
}

export function newDashboardState(): DashboardState {
  return {
    cards: {},
    relays: {},
    setpoints: {},
    connection: "polling",
    lastUpdateMs: null,
  };
}

function cardKey(device: string, sensor: string): string {
  return `${device}/${sensor}`;
}

export function applyHomeState(
  state: DashboardState,
  home: HomeState,
  nowMs: number,
): DashboardState {
  const cards: Record<string, SensorCard> = {};
  for (const r of home.readings) {
    cards[cardKey(r.device, r.sensor)] = {
      device: r.device,
      sensor: r.sensor,
      value: r.value, // exactly what the API said
      unit: UNITS[r.sensor] ?? "",
      ts: r.ts,
    };
  }
  const relays: Record<string, boolean> = {};
  const setpoints: Record<string, number | null> = {};
  for (const a of home.actuators) {
    relays[a.relay] = a.on;
    setpoints[a.relay] = a.setpoint;
  }
  const hasReadings = home.readings.length > 0;
  return {
    ...state,
    cards,
    relays,
    setpoints,
    lastUpdateMs: hasReadings ? nowMs : state.lastUpdateMs,
  };
}

export function applyReadingEvent(
  state: DashboardState,
  event: ReadingEvent,
  nowMs: number,
): DashboardState {
  const cards = { ...state.cards };
  const sensors: Array<[string, number]> = [
    ["temperature", event.temperature],
    ["humidity", event.humidity],
    ["light", event.light],
  ];
  for (const [sensor, value] of sensors) {
    cards[cardKey(event.device, sensor)] = {
      device: event.device,
      sensor,
      value,
      unit: UNITS[sensor] ?? "",
      ts: event.ts,
    };
  }
  return { ...state, cards, lastUpdateMs: nowMs };
}

export function applyActuatorEvent(
  state: DashboardState,
  event: ActuatorEvent,
): DashboardState {
  if (event.action === "set_setpoint") {
    return {
      ...state,
      setpoints: { ...state.setpoints, [event.relay]: event.setpoint ?? null },
    };
  }
  if (event.action !== "on" && event.action !== "off") {
    return state;
  }
  return {
    ...state,
    relays: { ...state.relays, [event.relay]: event.action === "on" },
  };
}

export function toggleOptimistic(
  state: DashboardState,
  relay: string,
  on: boolean,
): DashboardState {
  return { ...state, relays: { ...state.relays, [relay]: on } };
}

export function rollbackRelay(
  state: DashboardState,
  relay: string,
  previous: boolean,
): DashboardState {
  return { ...state, relays: { ...state.relays, [relay]: previous } };
}

export function setConnection(
  state: DashboardState,
  connection: ConnectionStatus,
): DashboardState {
  return { ...state, connection };
}

export function isStale(state: DashboardState, nowMs: number): boolean {
  if (state.lastUpdateMs === null) {
    return false; // nothing received yet; the banner covers total loss
  }
  return nowMs - state.lastUpdateMs > STALE_AFTER_MS;
}
