// Shapes of the maintenance service HTTP/SSE contract. The dashboard renders
// these verbatim; expected values, labels and intervene flags are never
// recomputed on the client.

export interface PolicyInfo {
  style: string;
  threshold: number;
}

export interface SensorLabel {
  sensor_id: string;
  label: number;
  ci_low: number;
  ci_high: number;
}

/** One point of a machine's condition series, as served by /condition. */
export interface SeriesPoint {
  seq: number;
  timestamp: number;
  expected_value: number;
  intervene: number;
  labels: SensorLabel[];
}

export interface MachineSummary {
  machine_id: string;
  last_estimate: SeriesPoint | null;
  last_reading_timestamp: number | null;
  stop_pending: boolean;
  alert_count: number;
  policy: PolicyInfo;
}

export interface ConditionResponse {
  machine_id: string;
  policy: PolicyInfo;
  points: SeriesPoint[];
  total_points: number;
  downsampled: boolean;
}

export interface AlertEntry {
  seq: number;
  code: number;
  subject: string;
  fired_by: string;
  timestamp?: number;
}

/** One event-log record as delivered on /stream data: lines. */
export interface StreamRecord {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  wall_time: number;
}

export interface PolicyEcho {
  style: string;
  threshold: number;
  machine_id: string | null;
  seq: number;
}

export interface StopAccepted {
  command_id: number;
  machine_id: string;
}
