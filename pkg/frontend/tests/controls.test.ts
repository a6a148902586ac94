import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { renderConditionChart } from "../src/chart.js";
import { renderControls, setPolicy, stopMachine, type ControlDeps } from "../src/controls.js";
import { policyFor } from "../src/state.js";
import { fixtureRecords, maxSeq, startHarness, waitFor, type Harness } from "./helpers.js";

const records = fixtureRecords();
const last = maxSeq(records);

interface Toast {
  message: string;
  tone: string;
}

function deps(h: Harness, confirmed: boolean, toasts: Toast[]): ControlDeps {
  return {
    api: new ApiClient(h.url),
    confirm: () => confirmed,
    toast: (message, tone = "info") => toasts.push({ message, tone }),
  };
}

describe("policy control", () => {
  it("round-trips a policy change into a moved threshold line", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      const before = renderConditionChart(h.vm.machines["M1"]!.series, policyFor(h.vm, "M1"));
      expect(before).toContain('data-threshold="0.6"');

      const echo = await setPolicy(deps(h, true, toasts), "conservative");
      expect(echo).toEqual({ style: "conservative", threshold: 0.2, machine_id: null, seq: last + 1 });

      // the change comes back as a policy record on the stream
      await waitFor(() => policyFor(h.vm, "M1").threshold === 0.2, "policy record");
      const after = renderConditionChart(h.vm.machines["M1"]!.series, policyFor(h.vm, "M1"));
      expect(after).toContain('data-threshold="0.2"');
      expect(after).not.toContain('data-threshold="0.6"');
      expect(after).toContain("conservative threshold 0.2");
    } finally {
      await h.close();
    }
  });

  it("does nothing when the operator declines the confirm", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      const countBefore = h.fixture.records.length;
      const echo = await setPolicy(deps(h, false, toasts), "aggressive");
      expect(echo).toBeNull();
      expect(h.fixture.records.length).toBe(countBefore);
      expect(toasts).toEqual([]);
    } finally {
      await h.close();
    }
  });

  it("surfaces a rejected style as an error toast", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      const echo = await setPolicy(deps(h, true, toasts), "reckless");
      expect(echo).toBeNull();
      expect(toasts.length).toBe(1);
      expect(toasts[0]!.tone).toBe("error");
      expect(toasts[0]!.message).toContain("422");
    } finally {
      await h.close();
    }
  });

  it("scopes a per-machine policy change", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      const echo = await setPolicy(deps(h, true, toasts), "aggressive", 0.9, "M2");
      expect(echo?.machine_id).toBe("M2");
      expect(echo?.threshold).toBe(0.9);
      await waitFor(() => policyFor(h.vm, "M2").threshold === 0.9, "scoped policy");
      expect(policyFor(h.vm, "M1").threshold).toBe(0.6);
    } finally {
      await h.close();
    }
  });
});

describe("stop control", () => {
  it("treats a 409 on an already pending machine as a notice, not a failure", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      expect(h.vm.machines["M1"]!.stopPending).toBe(true);
      const countBefore = h.fixture.records.length;
      const stopped = await stopMachine(deps(h, true, toasts), "M1");
      expect(stopped).toBe(false);
      expect(toasts[0]!.tone).toBe("info");
      expect(toasts[0]!.message).toContain("already pending");
      expect(h.fixture.records.length).toBe(countBefore);
    } finally {
      await h.close();
    }
  });

  it("stops a running machine and sees the pending flag on the stream", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      expect(h.vm.machines["M2"]!.stopPending).toBe(false);
      const stopped = await stopMachine(deps(h, true, toasts), "M2");
      expect(stopped).toBe(true);
      await waitFor(() => h.vm.machines["M2"]!.stopPending, "stop record");
      const record = h.fixture.records[h.fixture.records.length - 1];
      expect(record.kind).toBe("stop");
      expect(record.payload.machine_id).toBe("M2");
    } finally {
      await h.close();
    }
  });

  it("never sends a stop without a confirm", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      const countBefore = h.fixture.records.length;
      const stopped = await stopMachine(deps(h, false, toasts), "M2");
      expect(stopped).toBe(false);
      expect(h.fixture.records.length).toBe(countBefore);
    } finally {
      await h.close();
    }
  });

  it("reports an unknown machine as an error toast", async () => {
    const h = await startHarness();
    const toasts: Toast[] = [];
    try {
      const stopped = await stopMachine(deps(h, true, toasts), "M9");
      expect(stopped).toBe(false);
      expect(toasts[0]!.tone).toBe("error");
      expect(toasts[0]!.message).toContain("404");
    } finally {
      await h.close();
    }
  });
});

describe("controls markup", () => {
  it("marks the active style and scope", () => {
    const html = renderControls({ style: "conservative", threshold: 0.2 }, "M1", "raw");
    expect(html).toContain('<option value="conservative" selected>');
    expect(html).toContain("apply to machine M1");
    expect(html).toContain('placeholder="0.2"');
    expect(renderControls({ style: "moderate", threshold: 0.6 }, null, "hourly")).toContain("apply to fleet");
  });
});
