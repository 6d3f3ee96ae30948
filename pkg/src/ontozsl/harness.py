"""Datasets, evaluation metrics, and a synthetic benchmark generator.

A dataset is a feature table plus a label split.  Samples whose label is in
the seen set form the training split; samples with unseen labels form the
test split.  Metrics follow the usual zero-shot conventions: the headline
number is the unweighted mean of per-class accuracy over the unseen classes,
with plain sample accuracy reported alongside for generalized evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .ontology import (
    Annotation,
    Atomic,
    Bottom,
    Conjunction,
    Equivalence,
    Existential,
    Gci,
    LABEL,
    Ontology,
)


@dataclass(frozen=True)
class Sample:
    id: str
    label: str
    features: np.ndarray


@dataclass
class ZslDataset:
    feature_dim: int
    samples: list[Sample]
    seen_labels: frozenset[str]
    unseen_labels: frozenset[str]

    def train_samples(self) -> list[Sample]:
        return [s for s in self.samples if s.label in self.seen_labels]

    def test_samples(self) -> list[Sample]:
        return [s for s in self.samples if s.label in self.unseen_labels]


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def parse_split(text: str) -> tuple[frozenset[str], frozenset[str]]:
    """Read ``[seen]`` / ``[unseen]`` sections of one label per line."""
    section = None
    seen: set[str] = set()
    unseen: set[str] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[seen]":
            section = seen
        elif line == "[unseen]":
            section = unseen
        elif line.startswith("["):
            raise DataError(f"split line {line_no}: unknown section {line!r}")
        elif section is None:
            raise DataError(f"split line {line_no}: label before any section header")
        else:
            section.add(line)
    overlap = seen & unseen
    if overlap:
        raise DataError(f"labels in both splits: {', '.join(sorted(overlap))}")
    return frozenset(seen), frozenset(unseen)


def write_split(seen: Iterable[str], unseen: Iterable[str]) -> str:
    lines = ["[seen]"] + sorted(seen) + ["[unseen]"] + sorted(unseen)
    return "".join(line + "\n" for line in lines)


def parse_features(text: str) -> tuple[int, list[Sample]]:
    samples: list[Sample] = []
    dim: int | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise DataError(f"features line {line_no}: expected id, label, values")
        try:
            values = np.array([float(v) for v in parts[2].split(",")], dtype=float)
        except ValueError as exc:
            raise DataError(f"features line {line_no}: {exc}") from None
        if dim is None:
            dim = values.size
        elif values.size != dim:
            raise DataError(
                f"features line {line_no}: expected {dim} values, got {values.size}"
            )
        samples.append(Sample(parts[0], parts[1], values))
    if dim is None:
        raise DataError("feature file has no samples")
    return dim, samples


def write_features(samples: Iterable[Sample]) -> str:
    return "".join(
        f"{s.id}\t{s.label}\t{','.join(_fmt(v) for v in s.features)}\n" for s in samples
    )


def load_dataset(features_text: str, split_text: str) -> ZslDataset:
    """Combine feature and split files, rejecting unlisted labels."""
    dim, samples = parse_features(features_text)
    seen, unseen = parse_split(split_text)
    for s in samples:
        if s.label not in seen and s.label not in unseen:
            raise DataError(f"sample {s.id!r} has label {s.label!r} outside both splits")
    return ZslDataset(dim, samples, seen, unseen)


def parse_vector_table(text: str, what: str) -> dict[str, np.ndarray]:
    """``label<TAB>v1,...,vk`` rows (used for attributes and similar tables)."""
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise DataError(f"{what} line {line_no}: expected label and values")
        values = np.array([float(v) for v in parts[1].split(",")], dtype=float)
        if dim is None:
            dim = values.size
        elif values.size != dim:
            raise DataError(f"{what} line {line_no}: expected {dim} values, got {values.size}")
        table[parts[0]] = values
    return table


def write_vector_table(table: Mapping[str, np.ndarray]) -> str:
    return "".join(
        f"{label}\t{','.join(_fmt(v) for v in table[label])}\n" for label in sorted(table)
    )


def parse_class_map(text: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise DataError(f"class map line {line_no}: expected label and concept")
        mapping[parts[0]] = parts[1]
    return mapping


def write_class_map(mapping: Mapping[str, str]) -> str:
    return "".join(f"{label}\t{mapping[label]}\n" for label in sorted(mapping))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def sample_accuracy(predictions: Sequence[str], truth: Sequence[str]) -> float:
    """Fraction of correct predictions over all test samples."""
    if len(predictions) != len(truth):
        raise DataError("predictions and truth differ in length")
    if not truth:
        raise DataError("cannot score an empty test set")
    return sum(p == t for p, t in zip(predictions, truth)) / len(truth)


def per_class_accuracy(
    predictions: Sequence[str], truth: Sequence[str], labels: Iterable[str]
) -> dict[str, float]:
    if len(predictions) != len(truth):
        raise DataError("predictions and truth differ in length")
    out: dict[str, float] = {}
    for label in sorted(set(labels)):
        hits = [p == t for p, t in zip(predictions, truth) if t == label]
        if not hits:
            raise DataError(f"class {label!r} has no test samples")
        out[label] = sum(hits) / len(hits)
    return out


def macro_accuracy(
    predictions: Sequence[str], truth: Sequence[str], unseen_labels: Iterable[str]
) -> float:
    """Unweighted mean of per-class accuracy over the unseen classes."""
    per_class = per_class_accuracy(predictions, truth, unseen_labels)
    return sum(per_class.values()) / len(per_class)


# ---------------------------------------------------------------------------
# synthetic benchmark
# ---------------------------------------------------------------------------


@dataclass
class SyntheticData:
    ontology: Ontology
    dataset: ZslDataset
    attributes: dict[str, np.ndarray]


def _pick_trait_sets(
    rng: np.random.Generator, k_seen: int, k_unseen: int, traits_per_class: int
) -> tuple[list[tuple[int, ...]], int]:
    """Distinct trait combinations; unseen classes get well-separated ones.

    Every trait of an unseen class must also occur in some seen class, or no
    mapper could place it; resample until the draw satisfies that.
    """
    k = k_seen + k_unseen
    n_traits = traits_per_class + 3
    while math.comb(n_traits, traits_per_class) < k:
        n_traits += 1
    universe = list(combinations(range(n_traits), traits_per_class))
    for _attempt in range(1000):
        order = rng.permutation(len(universe))
        chosen = [universe[i] for i in order[:k]]
        # spread the unseen classes out: greedy farthest-first by overlap
        unseen: list[tuple[int, ...]] = [chosen[-1]]
        remaining = chosen[:-1]
        while len(unseen) < k_unseen:
            best = max(
                range(len(remaining)),
                key=lambda i: min(
                    traits_per_class - len(set(remaining[i]) & set(u)) for u in unseen
                ),
            )
            unseen.append(remaining.pop(best))
        seen_traits = set().union(*(set(s) for s in remaining)) if remaining else set()
        if all(set(u) <= seen_traits for u in unseen) and len(seen_traits) == n_traits:
            return remaining + unseen, n_traits
    raise DataError("could not cover all traits with seen classes; use more seen classes")


def gen_synthetic(
    k_seen: int,
    k_unseen: int,
    per_class: int,
    p: int = 16,
    noise: float = 0.05,
    seed: int = 0,
) -> SyntheticData:
    """Build a toy taxonomy with compositional class definitions.

    Each class gets a group and a set of traits; the ontology defines it as
    ``Group ^ Some(hasTrait, T1) ^ ...`` and groups are pairwise disjoint.
    The class indicator vector (group one-hot plus trait multi-hot) is the
    latent prototype: features are a seeded linear image of it plus Gaussian
    noise, and attribute vectors are the prototype plus noise.  Deterministic
    for a fixed argument tuple.
    """
    if k_seen < 2 or k_unseen < 1 or per_class < 1 or p < 2:
        raise DataError("synthetic sizes out of range")
    if noise < 0:
        raise DataError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    k = k_seen + k_unseen
    traits_per_class = 3
    trait_sets, n_traits = _pick_trait_sets(rng, k_seen, k_unseen, traits_per_class)

    n_groups = max(2, min(3, k_seen // 3))
    groups = [i % n_groups for i in range(k)]  # seen classes first covers every group

    class_names = [f"Class_{i:02d}" for i in range(k)]
    group_names = [f"Group_{g}" for g in range(n_groups)]
    trait_names = [f"Trait_{t}" for t in range(n_traits)]
    relation = "hasTrait"
    root = "Domain"

    axioms = []
    for g in group_names:
        axioms.append(Gci(Atomic(g), Atomic(root)))
    for a, b in combinations(group_names, 2):
        axioms.append(Gci(Conjunction(Atomic(a), Atomic(b)), Bottom()))
    for i, name in enumerate(class_names):
        exprs = [Atomic(group_names[groups[i]])] + [
            Existential(relation, Atomic(trait_names[t])) for t in trait_sets[i]
        ]
        body = exprs[-1]
        for expr in reversed(exprs[:-1]):
            body = Conjunction(expr, body)
        axioms.append(Equivalence(Atomic(name), body))
        axioms.append(Annotation(name, LABEL, f"class {i:02d}"))
    ontology = Ontology(
        concept_names=tuple([root] + group_names + trait_names + class_names),
        relation_names=(relation,),
        individual_names=(),
        axioms=tuple(axioms),
    )

    q = n_groups + n_traits
    prototypes = np.zeros((k, q))
    for i in range(k):
        prototypes[i, groups[i]] = 1.0
        for t in trait_sets[i]:
            prototypes[i, n_groups + t] = 1.0
    mix = rng.normal(size=(p, q)) / np.sqrt(q)

    samples: list[Sample] = []
    idx = 0
    for i, name in enumerate(class_names):
        base = mix @ prototypes[i]
        for _ in range(per_class):
            x = base + rng.normal(0.0, noise, size=p)
            samples.append(Sample(f"s{idx:05d}", name, x))
            idx += 1
    attributes = {
        name: prototypes[i] + rng.normal(0.0, noise, size=q)
        for i, name in enumerate(class_names)
    }
    dataset = ZslDataset(
        feature_dim=p,
        samples=samples,
        seen_labels=frozenset(class_names[:k_seen]),
        unseen_labels=frozenset(class_names[k_seen:]),
    )
    return SyntheticData(ontology, dataset, attributes)
