import type { MachineState, ViewModel } from "./state.js";
import type { AlertEntry } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** Newest first; acknowledged alerts are hidden but stay in the model. */
export function renderAlertFeed(alerts: AlertEntry[]): string {
  if (alerts.length === 0) return `<p class="feed-empty">no active alerts</p>`;
  const items = alerts
    .slice()
    .reverse()
    .map(
      (a) =>
        `<li class="alert" data-seq="${a.seq}" data-code="${a.code}">` +
        `<span class="code">${a.code}</span>` +
        `<span class="subject">${escapeHtml(a.subject)}</span>` +
        `<span class="rule">${escapeHtml(a.fired_by)}</span>` +
        `<button class="ack" data-ack="${a.seq}">ack</button></li>`,
    )
    .join("");
  return `<ul class="alert-feed">${items}</ul>`;
}

function fleetRow(m: MachineState, selected: boolean): string {
  const ev = m.series.length > 0 ? (m.series[m.series.length - 1] as { expected_value: number }).expected_value : null;
  const status = m.stopPending ? `<span class="badge stop">stop pending</span>` : `<span class="badge ok">running</span>`;
  return (
    `<tr class="machine${selected ? " selected" : ""}" data-select="${escapeHtml(m.machineId)}">` +
    `<td>${escapeHtml(m.machineId)}</td>` +
    `<td class="ev">${ev === null ? "&ndash;" : ev}</td>` +
    `<td>${m.alertCount}</td>` +
    `<td>${status}</td>` +
    `<td><button class="stop-btn" data-stop="${escapeHtml(m.machineId)}"${m.stopPending ? " disabled" : ""}>stop</button></td></tr>`
  );
}

export function renderFleetTable(vm: ViewModel, selectedId: string | null): string {
  const ids = Object.keys(vm.machines).sort();
  if (ids.length === 0) return `<p class="feed-empty">no machines reporting yet</p>`;
  const rows = ids.map((id) => fleetRow(vm.machines[id] as MachineState, id === selectedId)).join("");
  return (
    `<table class="fleet"><thead><tr>` +
    `<th>machine</th><th>last E</th><th>alerts</th><th>status</th><th></th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}
