// Shapes of the service API this console consumes. Nothing here is
// invented client-side; every field mirrors the JSON the backend sends.

export type ReplyKind = "question" | "result" | "unrecognized" | "aborted";

export interface ChatResponse {
  reply_kind: ReplyKind;
  reply_text: string;
  dispatched_command: Record<string, string> | null;
}

export interface SensorReading {
  device: string;
  sensor: string;
  value: number;
  ts: number;
}

export interface ActuatorState {
  relay: string;
  on: boolean;
  last_changed: number;
  setpoint: number | null;
}

export interface HomeState {
  readings: SensorReading[];
  actuators: ActuatorState[];
}

export interface AppSummary {
  name: string;
  description: string;
}

export interface ReadingEvent {
  type: "reading";
  device: string;
  temperature: number;
  humidity: number;
  light: number;
  ts: number;
}

export interface ActuatorEvent {
  type: "actuator";
  relay: string;
  action: string;
  setpoint?: number;
}

export interface ChatEvent {
  type: "chat";
  session: string;
  direction: "user" | "dpa";
  text: string;
}

export type ConsoleEvent = ReadingEvent | ActuatorEvent | ChatEvent;

export type ConnectionStatus = "live" | "polling" | "lost";
