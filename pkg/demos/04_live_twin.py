"""
The live twin in one process
============================

The full loop: sensor readings arrive over the embedded broker, the
labeler turns complete tuples into condition estimates, rules raise
alerts, and the agent issues a stop command once the intervention signal
persists past the debounce. Everything lands in one append-only event
log, which is also what the HTTP API serves.

The networked variant of this script is two shell commands:

    dtf serve --config twin.json
    dtf replay fixture.csv --broker 127.0.0.1:<port>
"""

import json
import tempfile

from dtf.config import PipelineConfig
from dtf.eventlog import scan
from dtf.ingest import SensorReading
from dtf.pipeline import Pipeline

HEALTHY = {"S1": 1.2, "S2": 2400.0, "S3": 1.1, "S4": 2.4, "S5": 24.0, "S6": 29.0, "S7": 170.0}
FAULTY = {**HEALTHY, "S5": 90.0, "S6": 120.0, "S7": 900.0}

with tempfile.TemporaryDirectory() as tmp:
    config = PipelineConfig(log_root=f"{tmp}/log", window_size=3, debounce=3)
    with Pipeline(config).start() as twin:
        # watch the command topic like a PLC would
        commands = twin.broker.bus.subscribe("plant/+/cmd")

        # 4 healthy cycles, then a bearing fault develops and persists
        for cycle in range(10):
            values = HEALTHY if cycle < 4 else FAULTY
            for sensor, value in values.items():
                twin.publish_reading(SensorReading("M1", sensor, cycle, value))
        twin.drain()

        stop = commands.messages.get(timeout=5.0)
        print(f"wire command on {stop.topic}: {stop.payload.decode()}\n")

    # the log is the single source of truth; replay it after the fact
    print("event log timeline:")
    for record in scan(config.log_root):
        payload = record.payload
        if record.kind == "reading":
            continue  # 70 of these, skip for readability
        if record.kind == "estimate":
            line = f"E={payload['expected_value']:.2f} intervene={payload['intervene']}"
        elif record.kind == "alert":
            line = f"code={payload['code']} subject={payload['subject']} by {payload['fired_by']}"
        elif record.kind == "stop":
            line = f"machine={payload['machine_id']} reason={payload['reason']} run={payload['evidence']['run_length']}"
        else:
            line = f"{payload['phase']} route={payload['route']} target={payload['target']}"
        print(f"  seq {record.seq:>3}  {record.kind:<8}  {line}")
