"""
Sliding-window condition labeling
=================================

A machine publishes one value per sensor per cycle. Each sensor keeps a
sliding window; when the window's confidence interval leaves the sensor's
normal operating range the sensor is labeled 1 (failure condition). The
weighted sum of labels is the machine's expected failure value E, and a
management policy turns E into an intervene/ignore decision.
"""

import numpy as np

from dtf.ingest import SensorReading
from dtf.labeler import (
    MachineLabeler,
    ManagementPolicy,
    SensorSpec,
    compute_ci,
    expected_value,
)

# The confidence interval behind every label: x-bar +/- z*s/sqrt(n).
window = [1.0, 2.0, 3.0, 4.0, 5.0]
lo, hi = compute_ci(window, z=1.96)
print(f"window {window} -> 95% CI ({lo:.4f}, {hi:.4f})")

# Normal operating ranges and failure weights for a seven-sensor machine.
# Weights must sum to exactly 1: E stays in [0, 1].
SPECS = [
    SensorSpec("S1", 0.0, 2.5, 0.10),
    SensorSpec("S2", 0.0, 5000.0, 0.03),
    SensorSpec("S3", 0.0, 2.5, 0.10),
    SensorSpec("S4", 0.0, 5.0, 0.02),
    SensorSpec("S5", 0.0, 50.0, 0.25),
    SensorSpec("S6", 0.0, 60.0, 0.30),
    SensorSpec("S7", 0.0, 360.0, 0.20),
]

HEALTHY = {"S1": 1.2, "S2": 2400.0, "S3": 1.1, "S4": 2.4, "S5": 24.0, "S6": 29.0, "S7": 170.0}
FAULTY = {"S5": 90.0, "S6": 120.0, "S7": 900.0}  # bearing group out of range

# Stream 12 cycles: 6 healthy, then a bearing failure develops.
rng = np.random.default_rng(0)
conservative = ManagementPolicy.preset("conservative")  # theta = 0.2
moderate = ManagementPolicy.preset("moderate")          # theta = 0.6

labeler = MachineLabeler("M1", SPECS, window_size=4, policy=moderate)
print("\n cycle      E   flagged sensors        conservative  moderate")
for cycle in range(12):
    estimate = None
    for spec in SPECS:
        base = FAULTY.get(spec.sensor_id, HEALTHY[spec.sensor_id])
        if cycle < 6:
            base = HEALTHY[spec.sensor_id]
        value = base + float(rng.uniform(-0.2, 0.2))
        estimate = labeler.push(SensorReading("M1", spec.sensor_id, cycle, value))
    if estimate is None:  # warm-up: windows need two values each
        print(f"{cycle:>6}   (warming up)")
        continue
    flagged = sorted(l.sensor_id for l in estimate.labels if l.label == 1)
    e = estimate.expected_value
    print(
        f"{cycle:>6}   {e:.2f}   {','.join(flagged) or '-':<20}"
        f"   {'intervene' if e >= conservative.threshold else 'ignore':<11}"
        f"   {'intervene' if e >= moderate.threshold else 'ignore'}"
    )

# E is just the weight sum of the flagged sensors.
flagged_weights = [s.weight for s in SPECS if s.sensor_id in FAULTY]
print(f"\nfully developed fault: E = {' + '.join(map(str, flagged_weights))}"
      f" = {expected_value([l for l in estimate.labels], SPECS)}")
