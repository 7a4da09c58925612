// HTML string templates over the view state. Pure functions so the
// transcript and dashboard can be asserted in tests without a browser.

import type { ChatState, DashboardState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderChat(state: ChatState): string {
  const parts: string[] = [];
  for (const m of state.messages) {
    const classes = ["bubble", m.who];
    if (m.kind) {
      classes.push(m.kind);
    }
    if (m.failed) {
      classes.push("failed");
    }
    let detail = "";
    if (m.command) {
      detail =
        `<details class="command"><summary>sent command</summary>` +
        `<pre>${escapeHtml(JSON.stringify(m.command, null, 2))}</pre></details>`;
    }
    const retry = m.failed
      ? `<div class="retry-note">not sent, press Enter to retry</div>`
      : "";
    parts.push(
      `<div class="${classes.join(" ")}">` +
        `<div class="text">${escapeHtml(m.text)}</div>${detail}${retry}</div>`,
    );
  }
  return parts.join("\n");
}

function formatValue(value: number): string {
  // show exactly what the API sent, trimmed for display only
  return Number.isInteger(value) ? String(value) : String(Math.round(value * 100) / 100);
}

export function renderDashboard(
  state: DashboardState,
  nowMs: number,
  stale: boolean,
): string {
  const parts: string[] = [];
  if (state.connection === "lost") {
    parts.push(`<div class="banner lost">connection lost</div>`);
  } else if (state.connection === "polling") {
    parts.push(`<div class="banner polling">live stream down, polling</div>`);
  }
  if (stale) {
    parts.push(`<div class="badge stale">stale data</div>`);
  }
  parts.push(`<div class="cards">`);
  const cards = Object.values(state.cards).sort((a, b) =>
    `${a.device}/${a.sensor}`.localeCompare(`${b.device}/${b.sensor}`),
  );
  for (const card of cards) {
    parts.push(
      `<div class="card sensor" data-sensor="${escapeHtml(card.device)}/${escapeHtml(card.sensor)}">` +
        `<div class="label">${escapeHtml(card.device)} ${escapeHtml(card.sensor)}</div>` +
        `<div class="value">${formatValue(card.value)}${escapeHtml(card.unit)}</div>` +
        `</div>`,
    );
  }
  parts.push(`</div><div class="relays">`);
  for (const relay of Object.keys(state.relays).sort()) {
    const on = state.relays[relay];
    const setpoint = state.setpoints[relay];
    const extra = setpoint != null ? ` <span class="setpoint">target ${formatValue(setpoint)}°C</span>` : "";
    parts.push(
      `<button class="relay ${on ? "on" : "off"}" data-relay="${escapeHtml(relay)}">` +
        `${escapeHtml(relay.replace(/_/g, " "))}: ${on ? "on" : "off"}${extra}</button>`,
    );
  }
  parts.push(`</div>`);
  return parts.join("\n");
}
