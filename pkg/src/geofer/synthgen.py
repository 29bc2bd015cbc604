"""Deterministic synthetic landmark trajectories with known class structure.

Each sequence starts from a jittered neutral layout and moves every landmark
towards its class template displacement along a smoothstep ramp, with an
optional onset delay, then adds i.i.d. Gaussian pixel noise to every frame.

The default templates make each landmark move in exactly ``max(1, K // 3)``
classes (sharing one displacement), so no single feature can tell all
classes apart and boosting has to combine features.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .data import DEFAULT_CLASS_NAMES, Dataset, DomainError, LandmarkSequence


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 6
    per_class: int = 20
    num_landmarks: int = 52
    min_frames: int = 10
    max_frames: int = 20
    noise: float = 1.0
    seed: int = 0
    amplitude: float = 6.0
    templates: tuple | None = None  # (K, L, 2) peak displacements; generated when None
    class_names: tuple | None = None

    def validate(self):
        if self.num_classes < 2:
            raise DomainError("num_classes must be >= 2")
        if self.per_class < 1:
            raise DomainError("per_class must be >= 1")
        if self.num_landmarks < 2:
            raise DomainError("num_landmarks must be >= 2")
        if not 2 <= self.min_frames <= self.max_frames:
            raise DomainError("need 2 <= min_frames <= max_frames")
        if not (np.isfinite(self.noise) and self.noise >= 0):
            raise DomainError("noise must be a finite value >= 0")
        if self.templates is not None:
            try:
                t = np.asarray(self.templates, dtype=np.float64)
            except (TypeError, ValueError):
                raise DomainError("templates must be a numeric (K, L, 2) array") from None
            if t.shape != (self.num_classes, self.num_landmarks, 2) or not np.all(np.isfinite(t)):
                raise DomainError(
                    f"templates must be finite with shape ({self.num_classes}, {self.num_landmarks}, 2)"
                )
        if self.class_names is not None and len(self.class_names) != self.num_classes:
            raise DomainError("class_names must have num_classes entries")

    @property
    def names(self) -> tuple[str, ...]:
        if self.class_names is not None:
            return tuple(self.class_names)
        if self.num_classes == len(DEFAULT_CLASS_NAMES):
            return DEFAULT_CLASS_NAMES
        return tuple(f"class{c}" for c in range(self.num_classes))

    @classmethod
    def from_json(cls, obj: dict) -> "SynthSpec":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown synth spec keys: {sorted(unknown)}")
        obj = dict(obj)
        if obj.get("class_names") is not None:
            obj["class_names"] = tuple(obj["class_names"])
        try:
            spec = cls(**obj)
        except TypeError as exc:
            raise DomainError(str(exc)) from None
        spec.validate()
        return spec

    def to_json(self) -> dict:
        d = asdict(self)
        if d["templates"] is not None:
            d["templates"] = np.asarray(d["templates"]).tolist()
        if d["class_names"] is not None:
            d["class_names"] = list(d["class_names"])
        return d


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def default_templates(K: int, L: int, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    groups = list(itertools.combinations(range(K), max(1, K // 3)))
    order = rng.permutation(len(groups))
    templates = np.zeros((K, L, 2))
    for l in range(L):
        active = groups[order[l % len(groups)]]
        angle = rng.uniform(-np.pi, np.pi)
        mag = amplitude * rng.uniform(0.6, 1.0)
        templates[list(active), l] = mag * np.cos(angle), mag * np.sin(angle)
    return templates


def neutral_layout(L: int, rng: np.random.Generator) -> np.ndarray:
    return np.column_stack([rng.uniform(40, 200, L), rng.uniform(40, 240, L)])


def class_templates(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """The neutral layout ``(L, 2)`` and class templates ``(K, L, 2)`` for ``spec``."""
    spec.validate()
    layout_ss, template_ss = np.random.SeedSequence([spec.seed, 0]).spawn(2)
    layout = neutral_layout(spec.num_landmarks, np.random.default_rng(layout_ss))
    if spec.templates is not None:
        templates = np.asarray(spec.templates, dtype=np.float64)
    else:
        templates = default_templates(
            spec.num_classes, spec.num_landmarks, spec.amplitude, np.random.default_rng(template_ss)
        )
    return layout, templates


def _sequence(layout, template, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    L = layout.shape[0]
    F = int(rng.integers(spec.min_frames, spec.max_frames + 1))
    neutral = layout + rng.uniform(-10, 10, 2) + rng.normal(0.0, 1.5, (L, 2))
    intensity = rng.uniform(0.8, 1.2)
    onset = rng.uniform(0.0, 0.3)
    t = np.arange(F) / (F - 1)
    ramp = smoothstep((t - onset) / (1.0 - onset))
    frames = neutral[None] + intensity * ramp[:, None, None] * template[None]
    return frames + rng.normal(0.0, 1.0, frames.shape) * spec.noise


def generate(spec: SynthSpec = SynthSpec()) -> Dataset:
    """Generate ``per_class`` sequences for every class, class-major order."""
    layout, templates = class_templates(spec)
    n = spec.num_classes * spec.per_class
    streams = np.random.SeedSequence([spec.seed, 1]).spawn(n)
    seqs = []
    for c in range(spec.num_classes):
        for k in range(spec.per_class):
            rng = np.random.default_rng(streams[c * spec.per_class + k])
            frames = _sequence(layout, templates[c], spec, rng)
            seqs.append(LandmarkSequence(frames, c, f"synth-{c}-{k:03d}"))
    return Dataset(tuple(seqs), spec.names, spec.num_landmarks)
