import { readFileSync } from "node:fs";
import { createFixtureServer } from "../fixture/server.mjs";
import { LiveStream } from "../src/sse.js";
import { applyRecord, initialState, type ViewModel } from "../src/state.js";
import type { SeriesPoint, StreamRecord } from "../src/types.js";

export function fixtureRecords(): StreamRecord[] {
  const url = new URL("../fixture/log.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as StreamRecord[];
}

/** Condition series for one machine, mapped straight from estimate payloads. */
export function seriesFor(records: StreamRecord[], machineId: string): SeriesPoint[] {
  return records
    .filter((r) => r.kind === "estimate" && (r.payload as any).machine_id === machineId)
    .map((r) => {
      const p = r.payload as any;
      return {
        seq: r.seq,
        timestamp: p.timestamp,
        expected_value: p.expected_value,
        intervene: p.intervene,
        labels: p.labels,
      };
    });
}

export function maxSeq(records: StreamRecord[]): number {
  const last = records[records.length - 1];
  return last ? last.seq : 0;
}

export async function waitFor(predicate: () => boolean, what = "condition", timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, 15));
  }
  throw new Error(`timed out waiting for ${what}`);
}

export interface Harness {
  url: string;
  fixture: ReturnType<typeof createFixtureServer>;
  vm: ViewModel;
  stream: LiveStream;
  seqs: number[];
  close: () => Promise<void>;
}

/** Fixture server plus a live stream folding into a fresh view model. */
export async function startHarness(records?: StreamRecord[]): Promise<Harness> {
  const fixture = createFixtureServer(records ? { records } : {});
  const { url } = await fixture.listen();
  const vm = initialState();
  const seqs: number[] = [];
  const stream = new LiveStream(url, {
    retryMs: 50,
    onRecord: (record) => {
      seqs.push(record.seq);
      applyRecord(vm, record);
    },
    onStatus: (status) => {
      vm.connection = status;
    },
  });
  const running = stream.run();
  return {
    url,
    fixture,
    vm,
    stream,
    seqs,
    close: async () => {
      stream.close();
      await running;
      await fixture.close();
    },
  };
}
