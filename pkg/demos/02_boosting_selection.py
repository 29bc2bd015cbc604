"""
Selecting features by boosting
==============================

Median prototypes turn each pool feature into a nearest-prototype weak
classifier. Multi-class boosting then picks a handful of them and weighs
their votes.
"""

import numpy as np

from geofer import PipelineConfig, SynthSpec, fit_pipeline, generate
from geofer.boosting import weak_confusion_scores
from geofer.evaluation import default_region_map, format_table, region_analysis, stratified_kfold
from geofer.normalization import normalize_dataset

ds = generate(SynthSpec(per_class=16, num_landmarks=20, seed=1))

# hold out one of four stratified folds
test_idx = stratified_kfold(ds, 4, seed=0)[0]
train = ds.subset(np.setdiff1d(np.arange(len(ds)), test_idx))
test = ds.subset(test_idx)

model = fit_pipeline(train, PipelineConfig("adaboost-dtw", rounds=30))

# the trace lists each round's pick, its weighted error and vote weight
for r in model.trace.rounds[:5]:
    print(f"{str(r.feature_id):>8}  err={r.err:.3f}  alpha={r.alpha:.3f}  train acc={r.train_acc:.2f}")
print("...", len(model.features), "features selected")

print("training accuracy:", np.mean(model.predict(train) == train.labels))
print("held-out accuracy:", np.mean(model.predict(test) == test.labels))

# how often each selected feature votes for each class, per actual class
scores = weak_confusion_scores(model.strong, normalize_dataset(train, model.reference))
print(format_table(scores, train.class_names, "weak-classifier votes (%)"))

# where on the face the chosen features live (contiguous landmark blocks)
print(region_analysis(model.features, default_region_map(train.num_landmarks)))
