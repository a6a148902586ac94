"""Operator command line: label, train, infer, replay, serve.

Each subcommand is a thin composition of library calls; domain logic
lives in the modules it wires together. Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .automl.workflow import (
    DISPLAY_NAMES,
    REPORT_COLUMNS,
    TUNE_OBJECTIVES,
    compare_models,
    render_report_table,
    tune_model,
)
from .config import load_config, packaged_data
from .errors import ConfigError, DtfError, EmptyDataset
from .eventlog import save_model
from .ingest import ReplayStream, TopicRoute, parse_cs2_row, sensor_from_column
from .knowledge import FactStore, load_rules, run_inference
from .labeler import (
    DEFAULT_WINDOW,
    DEFAULT_Z,
    POLICY_PRESETS,
    ManagementPolicy,
    label_rows,
    load_sensor_specs,
)
from .preprocess import load_dataset_csv

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _err(message: str) -> None:
    print(f"dtf: {message}", file=sys.stderr)


# -- label -------------------------------------------------------------------

def _label_table(
    lines: list[str], header: list[str], specs, window: int, z: float, policy
) -> tuple[list[str], list[list[str]]]:
    """Labeled output (header, rows) for a wide sensor CSV."""
    sensor_columns = [c for c in header if c not in ("timestamp", "label")]
    column_key = {c: sensor_from_column(c) for c in sensor_columns}
    machines: list[str] = []
    for c in sensor_columns:
        m = column_key[c][0]
        if m not in machines:
            machines.append(m)

    batches = []
    cells_per_row = []
    for i, line in enumerate(lines):
        readings, _ = parse_cs2_row(line, header, row_index=i)
        batches.append(readings)
        cells_per_row.append(next(csv.reader([line])))
    per_row = label_rows(batches, specs, window_size=window, z=z, policy=policy)

    if len(machines) == 1:
        value_columns = ["E", "label"]
    else:
        value_columns = [f"{m}_{suffix}" for m in machines for suffix in ("E", "label")]
    out_header = header + [f"{c}_label" for c in sensor_columns] + value_columns

    out_rows = []
    for cells, estimates in zip(cells_per_row, per_row):
        by_machine = {e.machine_id: e for e in estimates}
        row = list(cells)
        for c in sensor_columns:
            machine, sensor = column_key[c]
            est = by_machine.get(machine)
            if est is None:
                row.append("")
                continue
            labels = {l.sensor_id: l.label for l in est.labels}
            row.append(str(labels[sensor]) if sensor in labels else "")
        for m in machines:
            est = by_machine.get(m)
            if est is None:
                row.extend(["", ""])
            else:
                row.extend([repr(est.expected_value), str(est.intervene)])
        out_rows.append(row)
    return out_header, out_rows


def cmd_label(args: argparse.Namespace) -> int:
    path = Path(args.csv)
    text = path.read_text(encoding="utf-8")
    out_fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        if not text.strip():
            return EXIT_OK  # empty in, empty out
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = next(csv.reader([lines[0]]))
        specs = load_sensor_specs(args.specs if args.specs else packaged_data("sensor_specs.json"))
        policy = None
        if args.policy:
            policy = ManagementPolicy.preset(args.policy, args.threshold)
        out_header, out_rows = _label_table(
            lines[1:], header, specs, args.window, args.z, policy
        )
        writer = csv.writer(out_fh, lineterminator="\n")
        writer.writerow(out_header)
        writer.writerows(out_rows)
        return EXIT_OK
    finally:
        if out_fh is not sys.stdout:
            out_fh.close()


# -- train -------------------------------------------------------------------

def _report_row(report) -> dict:
    values = [
        DISPLAY_NAMES.get(report.model.kind, report.model.kind),
        round(report.accuracy, 4),
        round(report.auc, 4),
        round(report.recall, 4),
        round(report.precision, 4),
        round(report.f1, 4),
        round(report.kappa, 4),
        round(report.mcc, 4),
        round(report.train_time_s, 3),
    ]
    return dict(zip(REPORT_COLUMNS, values))


def cmd_train(args: argparse.Namespace) -> int:
    try:
        d = load_dataset_csv(args.csv, target=args.target)
    except KeyError:
        _err(f"target column {args.target!r} not found in {args.csv}")
        return EXIT_USAGE
    except EmptyDataset as exc:
        _err(str(exc))
        return EXIT_USAGE

    reports = compare_models(d, k=args.k, seed=args.seed)
    fitted, tuned = tune_model(reports[0].model, d, k=args.k, objective=args.objective)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifact_path = out_dir / f"{fitted.spec.kind}.json"
    save_model(fitted, artifact_path)
    report_path = out_dir / f"{fitted.spec.kind}.report.json"
    report_doc = {
        "columns": list(REPORT_COLUMNS),
        "rows": [_report_row(r) for r in reports],
        "tuned": _report_row(tuned),
        "hyperparams": dict(tuned.model.hyperparams),
        "artifact": artifact_path.name,
        "fingerprint": fitted.training_fingerprint,
        "k": args.k,
        "seed": args.seed,
        "objective": args.objective,
    }
    report_path.write_text(json.dumps(report_doc, indent=2) + "\n", encoding="utf-8")

    if args.json:
        print(json.dumps(report_doc, indent=2))
    else:
        print(render_report_table(reports), end="")
        print(f"tuned {fitted.spec.kind} {dict(tuned.model.hyperparams)}")
        print(f"artifact: {artifact_path}")
    return EXIT_OK


# -- infer -------------------------------------------------------------------

def cmd_infer(args: argparse.Namespace) -> int:
    store = FactStore.load_jsonl(args.facts)
    rules = load_rules(args.rules)
    result = run_inference(store, rules)
    doc = {
        "alerts": [a.to_json() for a in result.alerts],
        "new_facts": [f.to_json() for f in result.new_facts],
        "passes": result.passes,
    }
    if args.json:
        print(json.dumps(doc, ensure_ascii=False, indent=2))
    else:
        for alert in result.alerts:
            print(f"alert {alert.code} subject={alert.subject} rule={alert.fired_by}")
        if not result.alerts:
            print("no alerts")
    return EXIT_OK


# -- replay ------------------------------------------------------------------

def cmd_replay(args: argparse.Namespace) -> int:
    from .mqtt import MqttClient

    host, _, port_text = args.broker.rpartition(":")
    if not host or not port_text.isdigit():
        _err(f"--broker must be host:port, got {args.broker!r}")
        return EXIT_USAGE
    try:
        speed = "max" if args.speed == "max" else float(args.speed)
        stream = ReplayStream(args.csv, speed=speed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    route = TopicRoute()
    client = MqttClient(host, int(port_text), client_id="dtf-replay")
    count = 0
    try:
        for reading in stream:
            client.publish(
                route.topic_for(reading.machine_id, reading.sensor_id),
                json.dumps({"ts": reading.timestamp, "value": reading.value}),
            )
            count += 1
    finally:
        client.close()
    print(f"published {count} readings, skipped {len(stream.skipped)} rows")
    return EXIT_OK


# -- serve -------------------------------------------------------------------

def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .pipeline import Pipeline
    from .service import create_app

    config = load_config(args.config)
    config = config.with_overrides(
        log_root=args.log_root,
        api_host=args.api_host,
        api_port=args.api_port,
        broker_port=args.broker_port,
    )
    pipeline = Pipeline(config).start()
    try:
        app = create_app(pipeline.config, pipeline.config.log_root, command_port=pipeline)
        print(
            f"api: http://{config.api_host}:{config.api_port}  "
            f"broker: mqtt://{pipeline.broker.host}:{pipeline.broker.port}",
            flush=True,
        )
        uvicorn.run(app, host=config.api_host, port=config.api_port, log_level="warning")
        return EXIT_OK
    finally:
        pipeline.close()


# -- parser ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="add statistical failure labels to a sensor CSV")
    p.add_argument("csv")
    p.add_argument("--specs", help="sensor spec JSON (default: built-in limits)")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--z", type=float, default=DEFAULT_Z)
    p.add_argument("--policy", choices=sorted(POLICY_PRESETS))
    p.add_argument("--threshold", type=float)
    p.add_argument("-o", "--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="compare models, tune the winner, save an artifact")
    p.add_argument("csv")
    p.add_argument("--target", default="label")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objective", choices=sorted(TUNE_OBJECTIVES), default="accuracy")
    p.add_argument("--out", default="./models", help="artifact directory")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="run maintenance rules over a fact snapshot")
    p.add_argument("--rules", required=True)
    p.add_argument("--facts", required=True, help="JSONL fact snapshot")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("replay", help="publish a recorded CSV to an MQTT broker")
    p.add_argument("csv")
    p.add_argument("--speed", default="max", help="time multiplier, or 'max'")
    p.add_argument("--broker", default="127.0.0.1:1883", help="host:port")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the full twin: broker, pipeline, HTTP API")
    p.add_argument("--config", help="config JSON (default: $DT_CONFIG or built-ins)")
    p.add_argument("--log-root")
    p.add_argument("--api-host")
    p.add_argument("--api-port", type=int)
    p.add_argument("--broker-port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _err(f"file not found: {exc.filename or exc}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except DtfError as exc:
        _err(str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
