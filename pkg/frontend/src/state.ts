import type { AlertEntry, PolicyInfo, SeriesPoint, StreamRecord } from "./types.js";

// Client-side fold of the event stream. It mirrors the server's fleet
// projection by copying payload fields as-is; no expected value, label or
// intervene flag is ever derived here.

export interface MachineState {
  machineId: string;
  series: SeriesPoint[];
  lastReadingTimestamp: number | null;
  stopPending: boolean;
  alertCount: number;
}

export type ConnectionState = "connecting" | "live" | "closed";

export interface ViewModel {
  machines: Record<string, MachineState>;
  feed: AlertEntry[];
  /** seqs hidden from the feed; entries stay in feed for the audit trail */
  acknowledged: number[];
  globalPolicy: PolicyInfo;
  machinePolicies: Record<string, PolicyInfo>;
  lastSeq: number;
  connection: ConnectionState;
}

export const DEFAULT_POLICY: PolicyInfo = { style: "moderate", threshold: 0.6 };

export function initialState(policy: PolicyInfo = DEFAULT_POLICY): ViewModel {
  return {
    machines: {},
    feed: [],
    acknowledged: [],
    globalPolicy: { ...policy },
    machinePolicies: {},
    lastSeq: 0,
    connection: "connecting",
  };
}

function machineState(vm: ViewModel, machineId: string): MachineState {
  let m = vm.machines[machineId];
  if (!m) {
    m = {
      machineId,
      series: [],
      lastReadingTimestamp: null,
      stopPending: false,
      alertCount: 0,
    };
    vm.machines[machineId] = m;
  }
  return m;
}

/**
 * Applies one stream record to the view model, atomically and in place.
 * Records at or below lastSeq are reconnect overlap and are ignored, which
 * keeps the alert feed free of duplicates no matter how often the stream
 * re-delivers.
 */
export function applyRecord(vm: ViewModel, record: StreamRecord): ViewModel {
  if (record.seq <= vm.lastSeq) return vm;
  vm.lastSeq = record.seq;
  const p = record.payload as Record<string, any>;
  switch (record.kind) {
    case "reading": {
      machineState(vm, p.machine_id).lastReadingTimestamp = p.timestamp;
      break;
    }
    case "estimate": {
      const m = machineState(vm, p.machine_id);
      const point: SeriesPoint = {
        seq: record.seq,
        timestamp: p.timestamp,
        expected_value: p.expected_value,
        intervene: p.intervene,
        labels: p.labels,
      };
      m.series.push(point);
      // a healthy estimate re-arms the machine, same as the server projection
      if (p.intervene === 0) m.stopPending = false;
      break;
    }
    case "alert": {
      machineState(vm, p.subject).alertCount += 1;
      vm.feed.push({
        seq: record.seq,
        code: p.code,
        subject: p.subject,
        fired_by: p.fired_by,
        timestamp: p.timestamp,
      });
      break;
    }
    case "stop": {
      machineState(vm, p.machine_id).stopPending = true;
      break;
    }
    case "policy": {
      const policy: PolicyInfo = { style: p.style, threshold: p.threshold };
      if (p.machine_id) vm.machinePolicies[p.machine_id] = policy;
      else vm.globalPolicy = policy;
      break;
    }
    default:
      // action records and future kinds do not change the view
      break;
  }
  return vm;
}

export function applyAll(vm: ViewModel, records: Iterable<StreamRecord>): ViewModel {
  for (const record of records) applyRecord(vm, record);
  return vm;
}

/** Per-machine policy wins over the global one, as on the server. */
export function policyFor(vm: ViewModel, machineId: string): PolicyInfo {
  return vm.machinePolicies[machineId] ?? vm.globalPolicy;
}

export function acknowledgeAlert(vm: ViewModel, seq: number): ViewModel {
  if (!vm.acknowledged.includes(seq)) vm.acknowledged.push(seq);
  return vm;
}

export function visibleAlerts(vm: ViewModel): AlertEntry[] {
  const acked = new Set(vm.acknowledged);
  return vm.feed.filter((a) => !acked.has(a.seq));
}

export function machineIds(vm: ViewModel): string[] {
  return Object.keys(vm.machines).sort();
}
