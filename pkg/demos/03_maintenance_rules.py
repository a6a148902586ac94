"""
Maintenance rules and competency queries
========================================

Failure history and live sensor state live in a typed fact store. SWRL
style rules forward-chain over it: when a rule's antecedent holds, the
consequent is asserted and an alert fires with full provenance. Named
competency queries answer the recurring maintenance questions directly.
"""

from dtf.config import packaged_data
from dtf.knowledge import (
    FactStore,
    answer_competency_query,
    count_failures_by_sensor,
    failure_instance_facts,
    load_rules,
    run_inference,
    satisfies,
    sensor_reading_facts,
)

# A failure event: 45C, 20% humidity, failure type 4 seen 5 times.
store = FactStore()
store.assert_all(
    failure_instance_facts(
        "failure_0042", type_of_failure=4, number_of_occurrences=5,
        temperature=45.0, humidity=20.0,
    )
)

rules = load_rules(packaged_data("smart_maintenance_rules.json"))
result = run_inference(store, rules)
for alert in result.alerts:
    print(f"alert {alert.code} on {alert.subject} (rule {alert.fired_by})")

# Every inferred fact can be replayed: the recorded bindings still
# satisfy the rule's antecedent against the store.
for fact in result.new_facts:
    prov = result.provenance[fact]
    rule = next(r for r in rules if r.name == prov.rule)
    print(f"  {fact} <- {prov.rule} {dict(prov.bindings)} replay={satisfies(store, rule, prov.bindings)}")

# Sensor-equipment rules work the same way over live reading facts.
equipment = FactStore()
for sensor, value in (("S5", 1), ("S6", 1), ("S7", 1)):
    equipment.assert_all(sensor_reading_facts("press_9", sensor, value, timestamp=300))
eq_result = run_inference(equipment, load_rules(packaged_data("sensor_equipment_rules.json")))
print(f"\nbearing group in error -> {[(a.code, a.subject) for a in eq_result.alerts]}")

# Competency queries over a small failure history.
history = FactStore()
for fid, (temp, humid, ftype) in enumerate(
    [(45.0, 20.0, 4), (30.0, 70.0, 2), (41.0, 15.0, 4), (28.0, 80.0, 1)]
):
    history.assert_all(
        failure_instance_facts(f"f{fid}", ftype, 1, temp, humid, timestamp=fid * 3600)
    )
print("\navg temperature at failure:",
      answer_competency_query(history, "avg_temperature_at_failure"))
print("failures by humidity (split 50%):",
      answer_competency_query(history, "failures_by_humidity", split=50.0))
print("most common failure type above 35C:",
      answer_competency_query(history, "common_failure_type", min_temp=35.0))

# Error-event counts per sensor inside a time window.
print("error events by sensor:",
      count_failures_by_sensor(equipment, ["S5", "S6", "S7"], window=(0, 1000)))
