import type { ApiClient } from "./api.js";
import type { PolicyEcho, PolicyInfo } from "./types.js";
import { escapeHtml } from "./feed.js";

export type ConfirmFn = (message: string) => boolean;
export type ToastFn = (message: string, tone?: "info" | "error") => void;

export interface ControlDeps {
  api: ApiClient;
  confirm: ConfirmFn;
  toast: ToastFn;
}

export const POLICY_STYLES = ["conservative", "moderate", "aggressive"];

/**
 * Applies a policy after an explicit confirm; moving the threshold changes
 * when stops fire, so it never happens on a stray click. Returns the server
 * echo, or null when the operator backed out or the server refused.
 */
export async function setPolicy(
  deps: ControlDeps,
  style: string,
  threshold?: number,
  machineId?: string,
): Promise<PolicyEcho | null> {
  const scope = machineId ? `machine ${machineId}` : "the whole fleet";
  const detail = threshold === undefined ? style : `${style} with threshold ${threshold}`;
  if (!deps.confirm(`Apply ${detail} policy to ${scope}?`)) return null;
  try {
    const echo = await deps.api.setPolicy(style, threshold, machineId);
    deps.toast(`policy ${echo.style} (threshold ${echo.threshold}) applied`);
    return echo;
  } catch (err) {
    deps.toast(`policy change rejected: ${err}`, "error");
    return null;
  }
}

/**
 * Sends a stop command after confirm. A 409 means a stop is already pending
 * on the machine; that is operator information, not a failure.
 */
export async function stopMachine(deps: ControlDeps, machineId: string): Promise<boolean> {
  if (!deps.confirm(`Send a stop command to ${machineId}?`)) return false;
  const result = await deps.api.stopMachine(machineId);
  if (result.ok) {
    deps.toast(`stop accepted for ${machineId} (command ${result.accepted.command_id})`);
    return true;
  }
  if (result.status === 409) {
    deps.toast(`stop already pending for ${machineId}`);
    return false;
  }
  deps.toast(`stop failed with ${result.status}: ${result.detail}`, "error");
  return false;
}

export function renderControls(policy: PolicyInfo, machineId: string | null, view: string): string {
  const options = POLICY_STYLES.map(
    (s) => `<option value="${s}"${s === policy.style ? " selected" : ""}>${s}</option>`,
  ).join("");
  const scope = machineId ? `machine ${escapeHtml(machineId)}` : "fleet";
  return (
    `<div class="controls">` +
    `<label>policy <select id="policy-style">${options}</select></label>` +
    `<label>threshold <input id="policy-threshold" type="number" min="0" max="1" step="0.05" ` +
    `placeholder="${policy.threshold}"></label>` +
    `<button id="apply-policy" data-scope="${machineId ?? ""}">apply to ${scope}</button>` +
    `<button id="toggle-view" data-view="${view}">view: ${view}</button>` +
    `</div>`
  );
}
