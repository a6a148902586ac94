import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { fixtureRecords, maxSeq, seriesFor, startHarness, waitFor } from "./helpers.js";

const records = fixtureRecords();
const last = maxSeq(records);

describe("live stream", () => {
  it("replays the full log in order with no drops or duplicates", async () => {
    const h = await startHarness();
    try {
      await waitFor(() => h.vm.lastSeq === last, "full replay");
      expect(h.seqs.length).toBe(records.length);
      h.seqs.forEach((seq, i) => expect(seq).toBe(i + 1));
      expect(h.stream.audit.duplicates).toBe(0);
      expect(h.stream.audit.gaps).toBe(0);
      expect(h.vm.connection).toBe("live");
    } finally {
      await h.close();
    }
  });

  it("resumes with since_seq after a dropped connection, alerts intact", async () => {
    const h = await startHarness();
    try {
      await waitFor(() => h.vm.lastSeq === last, "initial replay");
      h.fixture.disconnectStreams();
      // appended while the client is offline; only a correct resume sees them
      h.fixture.append("alert", { code: 100, subject: "M2", fired_by: "rule01_humidity_temperature", timestamp: 50 });
      h.fixture.append("estimate", {
        machine_id: "M2",
        timestamp: 51,
        expected_value: 0.25,
        intervene: 0,
        labels: [],
      });
      await waitFor(() => h.vm.lastSeq === last + 2, "resume after drop");
      expect(new Set(h.seqs).size).toBe(h.seqs.length);
      expect(h.seqs.length).toBe(records.length + 2);
      expect(h.stream.audit.duplicates).toBe(0);
      expect(h.stream.audit.gaps).toBe(0);
      expect(h.vm.feed.filter((a) => a.code === 100).length).toBe(1);
    } finally {
      await h.close();
    }
  });

  it("shows a streamed alert in the feed within two seconds", async () => {
    const h = await startHarness();
    try {
      await waitFor(() => h.vm.lastSeq === last, "backlog");
      const t0 = Date.now();
      h.fixture.append("alert", { code: 100, subject: "M2", fired_by: "rule01_humidity_temperature", timestamp: 60 });
      await waitFor(() => h.vm.feed.some((a) => a.code === 100), "streamed alert");
      expect(Date.now() - t0).toBeLessThan(2000);
    } finally {
      await h.close();
    }
  });
});

describe("http client against the fixture", () => {
  it("reads the fleet summary the projection serves", async () => {
    const h = await startHarness();
    try {
      const api = new ApiClient(h.url);
      const machines = await api.machines();
      expect(machines.map((m) => m.machine_id)).toEqual(["M1", "M2"]);
      const m1 = machines[0]!;
      const rawSeries = seriesFor(records, "M1");
      expect(m1.stop_pending).toBe(true);
      expect(m1.alert_count).toBe(1);
      expect(m1.last_estimate?.expected_value).toBe(rawSeries[rawSeries.length - 1]!.expected_value);
      expect(m1.policy).toEqual({ style: "moderate", threshold: 0.6 });
    } finally {
      await h.close();
    }
  });

  it("serves the condition series with a window filter", async () => {
    const h = await startHarness();
    try {
      const api = new ApiClient(h.url);
      const all = await api.condition("M1");
      const rawSeries = seriesFor(records, "M1");
      expect(all.points.length).toBe(rawSeries.length);
      expect(all.total_points).toBe(rawSeries.length);
      const windowed = await api.condition("M1", 3);
      const horizon = rawSeries[rawSeries.length - 1]!.timestamp - 3;
      expect(windowed.points.length).toBe(rawSeries.filter((p) => p.timestamp > horizon).length);
      expect(windowed.points.length).toBeLessThan(all.points.length);
    } finally {
      await h.close();
    }
  });

  it("filters alerts by since_seq", async () => {
    const h = await startHarness();
    try {
      const api = new ApiClient(h.url);
      const all = await api.alerts();
      expect(all.length).toBe(1);
      expect(all[0]!.code).toBe(302);
      expect(await api.alerts(all[0]!.seq)).toEqual([]);
    } finally {
      await h.close();
    }
  });
});
