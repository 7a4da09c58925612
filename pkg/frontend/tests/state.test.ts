import assert from "node:assert/strict";
import { test } from "node:test";

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
  STALE_AFTER_MS,
} from "../src/state.js";
import type { ChatResponse, HomeState, ReadingEvent } from "../src/types.js";

function question(text: string): ChatResponse {
  return { reply_kind: "question", reply_text: text, dispatched_command: null };
}

function result(text: string, command: Record<string, string>): ChatResponse {
  return { reply_kind: "result", reply_text: text, dispatched_command: command };
}

test("chat state follows the two-turn dialog", () => {
  let s = newChatState("tab-1");
  s = addUserMessage(s, "Home, turn off", 1);
  s = addReply(s, question("What should I turn off?"), 2);
  assert.equal(s.awaitingQuestion, true);
  s = addUserMessage(s, "the computer", 3);
  s = addReply(
    s,
    result("Okay, the computer is now off.", {
      AppName: "Home",
      Intent: "Turn off",
      object: "the computer",
    }),
    4,
  );
  assert.equal(s.awaitingQuestion, false);
  assert.equal(s.messages.length, 4);
  assert.deepEqual(
    s.messages.map((m) => m.who),
    ["user", "dpa", "user", "dpa"],
  );
  assert.equal(s.messages[3].command?.object, "the computer");
});

test("session id is stable across interactions", () => {
  let s = newChatState("tab-42");
  s = addUserMessage(s, "hello", 1);
  s = addReply(s, question("?"), 2);
  assert.equal(s.sessionId, "tab-42");
});

test("failed send marks the last user message", () => {
  let s = newChatState("t");
  s = addUserMessage(s, "Home, turn off", 1);
  s = markLastUserMessageFailed(s);
  assert.equal(s.messages[0].failed, true);
});

test("reading events land with exact API values", () => {
  const ev: ReadingEvent = {
    type: "reading",
    device: "esp-1",
    temperature: 21.5,
    humidity: 40.125,
    light: 0.8,
    ts: 1000,
  };
  const d = applyReadingEvent(newDashboardState(), ev, 5000);
  assert.equal(d.cards["esp-1/temperature"].value, 21.5);
  assert.equal(d.cards["esp-1/humidity"].value, 40.125);
  assert.equal(d.cards["esp-1/light"].value, 0.8);
  assert.equal(d.cards["esp-1/temperature"].unit, "°C");
  assert.equal(d.lastUpdateMs, 5000);
});

test("polled home state replaces cards and relays", () => {
  const home: HomeState = {
    readings: [
      { device: "esp-1", sensor: "temperature", value: 19, ts: 10 },
      { device: "esp-1", sensor: "light", value: 0.3, ts: 10 },
    ],
    actuators: [
      { relay: "light", on: true, last_changed: 0, setpoint: null },
      { relay: "heater", on: false, last_changed: 0, setpoint: 25 },
    ],
  };
  const d = applyHomeState(newDashboardState(), home, 123);
  assert.equal(Object.keys(d.cards).length, 2);
  assert.equal(d.relays.light, true);
  assert.equal(d.setpoints.heater, 25);
  assert.equal(d.lastUpdateMs, 123);
});

test("actuator events flip relays and record setpoints", () => {
  let d = newDashboardState();
  d = applyActuatorEvent(d, { type: "actuator", relay: "light", action: "on" });
  assert.equal(d.relays.light, true);
  d = applyActuatorEvent(d, { type: "actuator", relay: "light", action: "off" });
  assert.equal(d.relays.light, false);
  d = applyActuatorEvent(d, {
    type: "actuator",
    relay: "heater",
    action: "set_setpoint",
    setpoint: 22,
  });
  assert.equal(d.setpoints.heater, 22);
  assert.equal(d.relays.light, false);
});

test("optimistic toggle and rollback", () => {
  let d = newDashboardState();
  d = toggleOptimistic(d, "light", true);
  assert.equal(d.relays.light, true);
  d = rollbackRelay(d, "light", false);
  assert.equal(d.relays.light, false);
});

test("double toggle is idempotent on final state", () => {
  let d = newDashboardState();
  d = toggleOptimistic(d, "light", true);
  d = toggleOptimistic(d, "light", true);
  assert.equal(d.relays.light, true);
});

test("stale badge appears only after three publish intervals", () => {
  let d = newDashboardState();
  assert.equal(isStale(d, 10_000), false); // nothing received yet
  d = applyReadingEvent(
    d,
    { type: "reading", device: "e", temperature: 1, humidity: 1, light: 0, ts: 1 },
    10_000,
  );
  assert.equal(isStale(d, 10_000 + STALE_AFTER_MS), false);
  assert.equal(isStale(d, 10_000 + STALE_AFTER_MS + 1), true);
});

test("connection status transitions", () => {
  let d = newDashboardState();
  d = setConnection(d, "live");
  assert.equal(d.connection, "live");
  d = setConnection(d, "lost");
  assert.equal(d.connection, "lost");
});
