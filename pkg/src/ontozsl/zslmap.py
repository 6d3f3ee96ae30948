"""Label encodings, feature-to-encoding mappers, and nearest-label prediction.

A label's semantic encoding concatenates, in a declared order, any of: the
center of its concept's embedding ball, its word-vector encoding, and a
hand-made attribute vector.  A linear mapper ``g`` is trained on seen-class
features so that ``g(x)`` lands near the encoding of the right label; test
features are classified by the nearest candidate encoding.

Two mappers are provided.  The autoencoder mapper minimizes the tied-weight
objective

    || X - W' Z ||_F^2  +  lam * || W X - Z ||_F^2

by full-batch gradient descent (an exact step size is computed by line search
on this quadratic unless a fixed rate is configured).  The ridge baseline is
the closed form ``Z X' (X X' + alpha I)^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, NumericalError, UnknownNameError
from .elembed import EmbeddingSpace
from .ontology import Ontology
from .textwalk import WordVectors, word_encoding


class Component(Enum):
    EL_CENTER = "el_center"
    WORD = "word"
    ATTRIBUTE = "attribute"


class Distance(Enum):
    L2 = "l2"
    COSINE = "cosine"


class CandidateSet(Enum):
    UNSEEN_ONLY = "unseen"
    SEEN_AND_UNSEEN = "all"


@dataclass(frozen=True)
class PredictConfig:
    distance: Distance = Distance.L2
    candidates: CandidateSet = CandidateSet.UNSEEN_ONLY


@dataclass
class EncodingTable:
    components: tuple[Component, ...]
    dim: int
    encodings: dict[str, np.ndarray]


@dataclass(frozen=True)
class GdConfig:
    """Gradient-descent settings; ``learning_rate=None`` means line search."""

    learning_rate: float | None = None
    max_iters: int = 5000
    tol: float = 1e-8
    seed: int = 0


@dataclass
class SaeModel:
    weights: np.ndarray  # m x p
    lam: float
    train_loss: float


# ---------------------------------------------------------------------------
# encodings
# ---------------------------------------------------------------------------


def encode_labels(
    labels: Sequence[str],
    components: Sequence[Component],
    *,
    space: EmbeddingSpace | None = None,
    word_vectors: WordVectors | None = None,
    ontology: Ontology | None = None,
    attributes: Mapping[str, np.ndarray] | None = None,
    class_map: Mapping[str, str] | None = None,
    normalize_components: bool = True,
) -> EncodingTable:
    """Build the encoding table for ``labels``.

    ``class_map`` translates dataset labels to concept names; absent entries
    fall back to the label itself.  Each component vector is L2-normalized
    before concatenation unless ``normalize_components`` is off.
    """
    parts_order = tuple(components)
    if not parts_order:
        raise DataError("at least one encoding component is required")
    if len(set(parts_order)) != len(parts_order):
        raise DataError("encoding components must not repeat")
    encodings: dict[str, np.ndarray] = {}
    for label in labels:
        concept = class_map.get(label, label) if class_map else label
        parts = []
        for component in parts_order:
            if component is Component.EL_CENTER:
                if space is None:
                    raise DataError("el_center component requires an embedding space")
                if concept not in space.concepts:
                    raise UnknownNameError(f"no embedded concept for label {label!r} ({concept!r})")
                part = space.concepts[concept].center.astype(float)
            elif component is Component.WORD:
                if word_vectors is None:
                    raise DataError("word component requires word vectors")
                from .ontology import EMPTY_ONTOLOGY

                part = word_encoding(concept, word_vectors, ontology or EMPTY_ONTOLOGY)
            else:
                if attributes is None:
                    raise DataError("attribute component requires an attribute table")
                if label not in attributes:
                    raise UnknownNameError(f"no attribute vector for label {label!r}")
                part = np.asarray(attributes[label], dtype=float)
            if normalize_components:
                norm = float(np.linalg.norm(part))
                if norm > 0.0:
                    part = part / norm
            parts.append(part)
        encodings[label] = np.concatenate(parts)
    dims = {v.size for v in encodings.values()}
    if len(dims) > 1:
        raise DataError(f"labels encode to inconsistent dimensions: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    return EncodingTable(parts_order, dim, encodings)


# ---------------------------------------------------------------------------
# autoencoder mapper
# ---------------------------------------------------------------------------


def _check_xz(x: np.ndarray, z: np.ndarray) -> None:
    if x.ndim != 2 or z.ndim != 2:
        raise DataError("feature and encoding matrices must be 2-D")
    if x.shape[1] != z.shape[1]:
        raise DataError(f"sample counts differ: {x.shape[1]} features vs {z.shape[1]} encodings")


def sae_loss(w: np.ndarray, x: np.ndarray, z: np.ndarray, lam: float) -> float:
    """Tied-weight reconstruction objective (see module docstring)."""
    _check_xz(x, z)
    if w.shape != (z.shape[0], x.shape[0]):
        raise DataError(f"weights must be {z.shape[0]} x {x.shape[0]}, got {w.shape}")
    recon = x - w.T @ z
    code = w @ x - z
    return float(np.sum(recon * recon) + lam * np.sum(code * code))


def sae_grad(w: np.ndarray, x: np.ndarray, z: np.ndarray, lam: float) -> np.ndarray:
    """Analytic gradient of :func:`sae_loss` with respect to the weights."""
    return -2.0 * z @ (x - w.T @ z).T + 2.0 * lam * (w @ x - z) @ x.T


def train_sae(
    x: np.ndarray,
    z: np.ndarray,
    lam: float,
    gd: GdConfig = GdConfig(),
    init: np.ndarray | None = None,
) -> SaeModel:
    """Fit the tied-weight mapper by seeded gradient descent.

    The objective is a convex quadratic in the weights, so exact line search
    along the negative gradient converges without tuning.  Stops after
    ``max_iters`` steps or once the relative loss improvement drops below
    ``tol``.
    """
    _check_xz(x, z)
    if lam < 0:
        raise DataError("lam must be nonnegative")
    m, p = z.shape[0], x.shape[0]
    if init is not None:
        if init.shape != (m, p):
            raise DataError(f"init must be {m} x {p}, got {init.shape}")
        w = init.astype(float).copy()
    else:
        w = np.random.default_rng(gd.seed).normal(scale=0.01, size=(m, p))
    xxt = x @ x.T
    zzt = z @ z.T
    # overflow shows up as a non-finite loss and is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        loss = sae_loss(w, x, z, lam)
        for _ in range(gd.max_iters):
            grad = sae_grad(w, x, z, lam)
            gsq = float(np.sum(grad * grad))
            if gsq == 0.0:
                break
            if gd.learning_rate is not None:
                step = gd.learning_rate
            else:
                curvature = 2.0 * float(np.sum(grad * (zzt @ grad + lam * grad @ xxt)))
                if curvature <= 0.0:
                    break
                step = gsq / curvature
            w -= step * grad
            new_loss = sae_loss(w, x, z, lam)
            if not np.isfinite(new_loss):
                raise NumericalError("autoencoder training produced a non-finite loss")
            if abs(loss - new_loss) < gd.tol * max(1.0, abs(loss)):
                loss = new_loss
                break
            loss = new_loss
    return SaeModel(w, lam, loss)


def train_ridge(x: np.ndarray, z: np.ndarray, alpha: float) -> np.ndarray:
    """Closed-form ridge regression from features onto encodings."""
    _check_xz(x, z)
    if alpha <= 0:
        raise DataError("alpha must be positive")
    p = x.shape[0]
    gram = x @ x.T + alpha * np.eye(p)
    # solve (X X' + aI) W' = X Z' so that W = Z X' (X X' + aI)^{-1}
    return np.linalg.solve(gram, x @ z.T).T


def map_features(model: SaeModel | np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply the learned linear map to one feature vector or a p x N batch."""
    weights = model.weights if isinstance(model, SaeModel) else model
    x = np.asarray(x, dtype=float)
    if x.shape[0] != weights.shape[1]:
        raise DataError(f"feature dimension {x.shape[0]} does not match mapper ({weights.shape[1]})")
    return weights @ x


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------


def distance(a: np.ndarray, b: np.ndarray, kind: Distance) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"cannot compare vectors of shapes {a.shape} and {b.shape}")
    if kind is Distance.L2:
        return float(np.linalg.norm(a - b))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise NumericalError("cosine distance is undefined for a zero vector")
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def predict(
    gx: np.ndarray,
    table: EncodingTable,
    cfg: PredictConfig,
    seen_labels: Sequence[str],
    unseen_labels: Sequence[str],
) -> str:
    """Label whose encoding is nearest to ``gx``; ties go to the smaller label.

    The candidate set is the unseen labels, or their union with the seen ones
    under :attr:`CandidateSet.SEEN_AND_UNSEEN`.
    """
    if cfg.candidates is CandidateSet.SEEN_AND_UNSEEN:
        candidates = sorted(set(unseen_labels) | set(seen_labels))
    else:
        candidates = sorted(set(unseen_labels))
    if not candidates:
        raise DataError("empty candidate set")
    best_label: str | None = None
    best = float("inf")
    for label in candidates:
        if label not in table.encodings:
            raise UnknownNameError(f"candidate label {label!r} has no encoding")
        d = distance(table.encodings[label], gx, cfg.distance)
        if d < best:
            best = d
            best_label = label
    assert best_label is not None
    return best_label


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_encodings(table: EncodingTable) -> str:
    lines = ["#components\t" + ",".join(c.value for c in table.components)]
    for label in sorted(table.encodings):
        lines.append(label + "\t" + ",".join(_fmt(v) for v in table.encodings[label]))
    return "".join(line + "\n" for line in lines)


def load_encodings(text: str) -> EncodingTable:
    components: tuple[Component, ...] = ()
    encodings: dict[str, np.ndarray] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("#components\t"):
            names = raw.split("\t", 1)[1].split(",")
            components = tuple(Component(n) for n in names if n)
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise DataError(f"line {line_no}: encoding rows take 2 fields")
        encodings[parts[0]] = np.array([float(v) for v in parts[1].split(",")], dtype=float)
    dims = {v.size for v in encodings.values()}
    if len(dims) > 1:
        raise DataError(f"inconsistent encoding dimensions: {sorted(dims)}")
    return EncodingTable(components, dims.pop() if dims else 0, encodings)


def save_model(model: SaeModel | np.ndarray, *, alpha: float | None = None) -> str:
    """Header with kind and shape, then row-major weight rows."""
    if isinstance(model, SaeModel):
        head = f"#kind\tsae\t{_fmt(model.lam)}"
        weights = model.weights
    else:
        head = f"#kind\tridge\t{_fmt(alpha if alpha is not None else 0.0)}"
        weights = model
    lines = [head, f"#shape\t{weights.shape[0]}\t{weights.shape[1]}"]
    for row in weights:
        lines.append(",".join(_fmt(v) for v in row))
    return "".join(line + "\n" for line in lines)


def load_model(text: str) -> SaeModel | np.ndarray:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2 or not lines[0].startswith("#kind\t") or not lines[1].startswith("#shape\t"):
        raise DataError("model file must start with #kind and #shape headers")
    kind_parts = lines[0].split("\t")
    shape_parts = lines[1].split("\t")
    rows, cols = int(shape_parts[1]), int(shape_parts[2])
    if len(lines) - 2 != rows:
        raise DataError(f"expected {rows} weight rows, found {len(lines) - 2}")
    weights = np.empty((rows, cols))
    for i, line in enumerate(lines[2:]):
        values = [float(v) for v in line.split(",")]
        if len(values) != cols:
            raise DataError(f"weight row {i} has {len(values)} entries, expected {cols}")
        weights[i] = values
    if kind_parts[1] == "sae":
        return SaeModel(weights, float(kind_parts[2]), float("nan"))
    if kind_parts[1] == "ridge":
        return weights
    raise DataError(f"unknown model kind {kind_parts[1]!r}")
