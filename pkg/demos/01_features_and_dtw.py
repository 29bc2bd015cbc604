"""
Landmark features and DTW distances
===================================

Build one synthetic sequence, turn it into displacement and pair features,
then compare two feature vectors with dynamic time warping.
"""

import numpy as np

from geofer import DtwConfig, SynthSpec, dtw_distance, enumerate_pool, generate, lower_bound
from geofer.features import extract_feature
from geofer.synthgen import class_templates
from geofer.normalization import compute_neutral_reference, normalize_dataset, resample_sequence

# a small dataset: 6 classes, 3 sequences each, 10 landmarks
ds = generate(SynthSpec(per_class=3, num_landmarks=10, seed=7))
print(len(ds), "sequences;", ds.num_landmarks, "landmarks;", ds.class_names)

# every sequence is first moved onto the dataset's mean neutral face
ref = compute_neutral_reference(ds)
normed = normalize_dataset(ds, ref)
x = normed[0]
print("frame 0 now equals the reference:", np.allclose(x.frames[0], ref.mean_points))

# the pool holds one displacement feature per landmark and one
# (distance change, angle change) feature per landmark pair
pool = enumerate_pool(ds.num_landmarks)
print("pool size:", len(pool), "first ids:", [str(f) for f in pool[:3]], "...", str(pool[-1]))

# each landmark moves in some classes and stays still in the others;
# take the one that moves most for the class of sequence 0
_, templates = class_templates(SynthSpec(per_class=3, num_landmarks=10, seed=7))
fid = pool[int(np.argmax(np.linalg.norm(templates[ds.labels[0]], axis=1)))]
print(fid, "elements (first 3 frames):")
print(extract_feature(x, fid).elements[:3])

# training sequences are resampled to 16 frames; endpoints stay put
r = resample_sequence(x, 16)
print("frames before/after resampling:", x.num_frames, r.num_frames)

# average DTW distance from sequence 0 to its own class and to the others
feats = [extract_feature(s, fid) for s in normed]
d = np.array([dtw_distance(feats[0], f) for f in feats])
own = ds.labels == ds.labels[0]
print(f"mean DTW to own class {d[own][1:].mean():.2f}, to other classes {d[~own].mean():.2f}")

# a Sakoe-Chiba band speeds things up and admits a cheap lower bound
a = extract_feature(normed[0], fid).elements
b = extract_feature(normed[-1], fid).elements
cfg = DtwConfig(window=abs(len(a) - len(b)) + 3)
print(f"banded DTW {dtw_distance(a, b, cfg):.2f} >= lower bound {lower_bound(a, b, cfg):.2f}")
