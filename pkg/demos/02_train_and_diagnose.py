"""Train the three-stage diagnoser on the desk network and ask it questions.

The training set is deliberately small so the script finishes in well under
a minute; the acceptance suite runs the full-size version.

Stage 1 names a tentatively disconnected link. Stage 2 predicts what the
delays would look like if that were the whole story and compares with what
was measured. A large mismatch means the link was replaced by another one,
and Stage 3 then names both the removed and the added link.

    python demos/02_train_and_diagnose.py
"""

from dataclasses import replace

from linkfault import FaultScenario, diagnose, measure, reference_topology
from linkfault.config import ExperimentConfig
from linkfault.experiment import build_datasets, evaluate_mixed, evaluate_stage1, mixed_test_set, train_all

base = ExperimentConfig()
cfg = replace(
    base,
    dataset=replace(base.dataset, samples_per_class=60, reconnection_samples_per_class=20, reconnection_scenarios=8),
    train=replace(base.train, trees_count=40),
    regressor=replace(base.regressor, hidden_layers=(128, 128)),
)

desk = reference_topology("desk10")
data = build_datasets(desk, cfg)
print(f"Stage-1 training rows: {len(data.stage1_train)}, classes: {len(data.stage1_train.label_space)}")
print(f"Stage-3 training rows: {len(data.stage3_train)}, classes: {len(data.stage3_train.label_space)}")

pipeline = train_all(data, cfg)
stage1 = evaluate_stage1(pipeline.stage1, data.stage1_test)
print(f"\nStage 1 on held-out disconnections: macro-F1 {stage1.scores.macro_f1:.3f}, "
      f"detection accuracy {stage1.detection_accuracy:.3f}")

X, truth = mixed_test_set(data.stage1_test, data.stage3_test)
mixed = evaluate_mixed(pipeline, X, truth)
print(f"Mixed faults, Stage 1 alone: {mixed.stage1_alone.scores.macro_f1:.3f}")
print(f"Mixed faults, full pipeline: {mixed.pipeline.scores.macro_f1:.3f}")

# Diagnose fresh measurements that the models have never seen: one of each fault class.
cases = [FaultScenario.no_fault(), FaultScenario.disconnection((3, 4))] + list(data.stage3_train.label_space)
right = 0
print()
for sc in cases:
    d = diagnose(measure(desk, data.demands, sc, seed=999).values, pipeline)
    got = (d.disconnected_link, d.reconnected_link)
    right += got == (sc.removed, sc.added)
    print(f"truth {str(sc):<28} -> {d.fault_type.value:<18} removed={d.disconnected_link} "
          f"added={d.reconnected_link} ({d.inference_time:.0f} us)")
# A replacement link that barely changes any route can pass for "no fault"; more data helps.
print(f"\n{right} of {len(cases)} fresh samples fully diagnosed")
