import { ApiClient } from "./api.js";
import { renderConditionChart, type ChartView } from "./chart.js";
import { renderControls, setPolicy, stopMachine, type ControlDeps } from "./controls.js";
import { renderAlertFeed, renderFleetTable } from "./feed.js";
import { LiveStream } from "./sse.js";
import {
  acknowledgeAlert,
  applyRecord,
  initialState,
  machineIds,
  policyFor,
  visibleAlerts,
} from "./state.js";

// Browser entry point. All state lives in the view model fold; every stream
// record is applied and re-rendered on the single UI event loop, so the
// operator never sees a half-applied event.

const base = new URLSearchParams(location.search).get("api") ?? location.origin;
const api = new ApiClient(base);
const vm = initialState();

let selected: string | null = null;
let view: ChartView = "raw";

const el = (id: string) => document.getElementById(id) as HTMLElement;

function toast(message: string, tone: "info" | "error" = "info"): void {
  const box = el("toast");
  box.textContent = message;
  box.className = `toast ${tone} show`;
  setTimeout(() => box.classList.remove("show"), 4000);
}

const deps: ControlDeps = { api, confirm: (msg) => window.confirm(msg), toast };

function render(): void {
  const ids = machineIds(vm);
  if (selected === null && ids.length > 0) selected = ids[0] as string;
  el("fleet").innerHTML = renderFleetTable(vm, selected);
  el("feed").innerHTML = renderAlertFeed(visibleAlerts(vm));
  const policy = policyFor(vm, selected ?? "");
  el("controls").innerHTML = renderControls(policy, selected, view);
  const series = selected ? (vm.machines[selected]?.series ?? []) : [];
  el("chart").innerHTML = renderConditionChart(series, policy, { view });
  el("chart-title").textContent = selected ? `condition of ${selected}` : "condition";
  el("status").textContent = vm.connection;
  el("status").className = `conn ${vm.connection}`;
}

document.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const ack = target.dataset.ack;
  if (ack !== undefined) {
    acknowledgeAlert(vm, Number(ack));
    render();
    return;
  }
  const stop = target.dataset.stop ?? target.closest<HTMLElement>("[data-stop]")?.dataset.stop;
  if (stop) {
    void stopMachine(deps, stop);
    return;
  }
  if (target.id === "apply-policy") {
    const style = (el("policy-style") as HTMLSelectElement).value;
    const raw = (el("policy-threshold") as HTMLInputElement).value;
    const threshold = raw === "" ? undefined : Number(raw);
    const scope = target.dataset.scope || undefined;
    // the confirmed change lands as a policy record on the stream, which is
    // what moves the dashed line; no local echo handling needed
    void setPolicy(deps, style, threshold, scope);
    return;
  }
  if (target.id === "toggle-view") {
    view = view === "raw" ? "hourly" : "raw";
    render();
    return;
  }
  const row = target.closest<HTMLElement>("[data-select]");
  if (row?.dataset.select) {
    selected = row.dataset.select;
    render();
  }
});

async function main(): Promise<void> {
  // seed the effective policy from the fleet snapshot, then fold the full
  // stream; since_seq=0 replays history and follow=1 keeps it live
  try {
    const machines = await api.machines();
    const first = machines[0];
    if (first) vm.globalPolicy = first.policy;
  } catch {
    // service may still be starting; the stream retry loop covers us
  }
  const stream = new LiveStream(base, {
    onRecord: (record) => {
      applyRecord(vm, record);
      render();
    },
    onStatus: (status) => {
      vm.connection = status;
      render();
    },
  });
  window.addEventListener("beforeunload", () => stream.close());
  render();
  await stream.run();
}

void main();
