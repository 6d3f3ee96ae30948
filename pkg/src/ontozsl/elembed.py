"""Geometric embeddings for normalized ontologies.

Each concept becomes an n-ball (center, radius), each relation a translation
vector.  Training minimizes max-margin losses that realize the normal-form
axioms geometrically; every loss adds ``| ||center|| - 1 |`` regularizers that
pull the centers of its concept operands onto the unit sphere.  With margin
``e`` and writing ``c(X)``/``r(X)`` for center and radius:

    NF1  A [= B           max(0, |c(A)-c(B)| + r(A) - r(B) - e)
    NF2  A [= Some(t, B)  max(0, |c(A)+v(t)-c(B)| + r(A) - r(B) - e)
    NF3  Some(t, A) [= B  max(0, |c(A)-v(t)-c(B)| - r(A) - r(B) - e)
    NF4  And(A, B) [= C   three hinges keeping C near the A/B overlap
    DISJ And(A, B) [= Bot max(0, r(A) + r(B) - |c(A)-c(B)| + e)
    RSUB t [= s           |v(t) - v(s)|        (no regularizers)

plus a negative loss that pushes corrupted NF2 fillers out of reach.  All
gradients are computed analytically and checked against finite differences in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError, NumericalError, UnknownNameError
from .normalform import (
    BOTTOM,
    NF1,
    NF2,
    NF3,
    NF4,
    TOP,
    Disjointness,
    NormalAxiom,
    NormalizedOntology,
    RSub,
)


@dataclass
class Ball:
    center: np.ndarray
    radius: float

    def copy(self) -> "Ball":
        return Ball(self.center.copy(), self.radius)


@dataclass
class EmbeddingSpace:
    dim: int
    concepts: dict[str, Ball]
    relations: dict[str, np.ndarray]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSpace):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.concepts.keys() == other.concepts.keys()
            and self.relations.keys() == other.relations.keys()
            and all(
                np.array_equal(b.center, other.concepts[n].center)
                and b.radius == other.concepts[n].radius
                for n, b in self.concepts.items()
            )
            and all(np.array_equal(v, other.relations[n]) for n, v in self.relations.items())
        )


@dataclass(frozen=True)
class ElTrainConfig:
    dim: int = 50
    margin: float = 0.1
    learning_rate: float = 0.01
    epochs: int = 1000
    batch_size: int = 64
    negatives: int = 1
    min_radius: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1 or self.epochs < 0 or self.batch_size < 1 or self.negatives < 0:
            raise DataError("embedding config out of range")
        if self.learning_rate <= 0 or self.min_radius <= 0 or self.margin < 0:
            raise DataError("embedding config out of range")


# ---------------------------------------------------------------------------
# losses and gradients
# ---------------------------------------------------------------------------

# Gradient dictionaries map ("c", name) -> center gradient, ("r", name) ->
# radius gradient, ("v", name) -> relation-vector gradient, with repeated
# operands accumulated.

Grads = dict[tuple[str, str], np.ndarray | float]


def _ball(space: EmbeddingSpace, name: str) -> Ball:
    try:
        return space.concepts[name]
    except KeyError:
        raise UnknownNameError(f"no embedded concept named {name!r}") from None


def _vec(space: EmbeddingSpace, name: str) -> np.ndarray:
    try:
        return space.relations[name]
    except KeyError:
        raise UnknownNameError(f"no embedded relation named {name!r}") from None


def _acc(grads: Grads, key: tuple[str, str], value) -> None:
    if key in grads:
        grads[key] = grads[key] + value
    else:
        grads[key] = value


def _norm_penalty(center: np.ndarray, name: str, grads: Grads | None) -> float:
    """``| ||center|| - 1 |`` and, when asked, its subgradient."""
    nrm = float(np.linalg.norm(center))
    if grads is not None and nrm > 0.0:
        _acc(grads, ("c", name), np.sign(nrm - 1.0) * (center / nrm))
    return abs(nrm - 1.0)


def _hinge_pair(
    a: str,
    b: str,
    diff: np.ndarray,
    signed_radii: float,
    margin: float,
    sign_dist: float,
    sign_ra: float,
    sign_rb: float,
    grads: Grads | None,
    rel: str | None = None,
    sign_rel: float = 0.0,
) -> float:
    """Shared hinge ``max(0, sign_dist*|diff| + signed_radii - margin)``."""
    dist = float(np.linalg.norm(diff))
    raw = sign_dist * dist + signed_radii - margin
    if raw <= 0.0:
        return 0.0
    if grads is not None:
        direction = diff / dist if dist > 0.0 else np.zeros_like(diff)
        _acc(grads, ("c", a), sign_dist * direction)
        _acc(grads, ("c", b), -sign_dist * direction)
        _acc(grads, ("r", a), sign_ra)
        _acc(grads, ("r", b), sign_rb)
        if rel is not None:
            _acc(grads, ("v", rel), sign_rel * direction)
    return raw


def _nf1(space, a: str, b: str, margin: float, grads: Grads | None) -> float:
    ba, bb = _ball(space, a), _ball(space, b)
    loss = _hinge_pair(a, b, ba.center - bb.center, ba.radius - bb.radius, margin, 1.0, 1.0, -1.0, grads)
    return loss + _norm_penalty(ba.center, a, grads) + _norm_penalty(bb.center, b, grads)


def _nf2(space, a: str, rel: str, b: str, margin: float, grads: Grads | None) -> float:
    ba, bb = _ball(space, a), _ball(space, b)
    diff = ba.center + _vec(space, rel) - bb.center
    loss = _hinge_pair(a, b, diff, ba.radius - bb.radius, margin, 1.0, 1.0, -1.0, grads, rel, 1.0)
    return loss + _norm_penalty(ba.center, a, grads) + _norm_penalty(bb.center, b, grads)


def _nf3(space, rel: str, a: str, b: str, margin: float, grads: Grads | None) -> float:
    ba, bb = _ball(space, a), _ball(space, b)
    diff = ba.center - _vec(space, rel) - bb.center
    loss = _hinge_pair(a, b, diff, -ba.radius - bb.radius, margin, 1.0, -1.0, -1.0, grads, rel, -1.0)
    return loss + _norm_penalty(ba.center, a, grads) + _norm_penalty(bb.center, b, grads)


def _nf4(space, a: str, b: str, c: str, margin: float, grads: Grads | None) -> float:
    ba, bb, bc = _ball(space, a), _ball(space, b), _ball(space, c)
    loss = _hinge_pair(a, b, ba.center - bb.center, -ba.radius - bb.radius, margin, 1.0, -1.0, -1.0, grads)
    loss += _hinge_pair(a, c, ba.center - bc.center, -bc.radius, margin, 1.0, 0.0, -1.0, grads)
    loss += _hinge_pair(b, c, bb.center - bc.center, -bc.radius, margin, 1.0, 0.0, -1.0, grads)
    for name, ball in ((a, ba), (b, bb), (c, bc)):
        loss += _norm_penalty(ball.center, name, grads)
    return loss


def _disjoint(space, a: str, b: str, margin: float, grads: Grads | None) -> float:
    ba, bb = _ball(space, a), _ball(space, b)
    loss = _hinge_pair(a, b, ba.center - bb.center, ba.radius + bb.radius, -margin, -1.0, 1.0, 1.0, grads)
    return loss + _norm_penalty(ba.center, a, grads) + _norm_penalty(bb.center, b, grads)


def _role(space, sub: str, sup: str, grads: Grads | None) -> float:
    va, vb = _vec(space, sub), _vec(space, sup)
    diff = va - vb
    dist = float(np.linalg.norm(diff))
    if grads is not None and dist > 0.0:
        _acc(grads, ("v", sub), diff / dist)
        _acc(grads, ("v", sup), -diff / dist)
    return dist


def _nf2_negative(space, a: str, rel: str, b: str, margin: float, grads: Grads | None) -> float:
    ba, bb = _ball(space, a), _ball(space, b)
    diff = ba.center + _vec(space, rel) - bb.center
    loss = _hinge_pair(a, b, diff, ba.radius + bb.radius, -margin, -1.0, 1.0, 1.0, grads, rel, -1.0)
    return loss + _norm_penalty(ba.center, a, grads) + _norm_penalty(bb.center, b, grads)


def loss_nf1(space: EmbeddingSpace, a: str, b: str, margin: float) -> float:
    """Penalty for the ball of ``a`` poking out of the ball of ``b``."""
    return _nf1(space, a, b, margin, None)


def loss_nf2(space: EmbeddingSpace, a: str, relation: str, b: str, margin: float) -> float:
    """Like :func:`loss_nf1` after translating ``a`` by the relation vector."""
    return _nf2(space, a, relation, b, margin, None)


def loss_nf3(space: EmbeddingSpace, relation: str, a: str, b: str, margin: float) -> float:
    """Keeps the back-translated filler ball within reach of ``b``."""
    return _nf3(space, relation, a, b, margin, None)


def loss_nf4(space: EmbeddingSpace, a: str, b: str, c: str, margin: float) -> float:
    """Keeps ``a`` and ``b`` overlapping and both near the center of ``c``."""
    return _nf4(space, a, b, c, margin, None)


def loss_disjoint(space: EmbeddingSpace, a: str, b: str, margin: float) -> float:
    """Pushes two balls apart until they no longer intersect; symmetric."""
    return _disjoint(space, a, b, margin, None)


def loss_role(space: EmbeddingSpace, sub: str, sup: str) -> float:
    """Distance between the vectors of two relations in an inclusion."""
    return _role(space, sub, sup, None)


def loss_nf2_negative(space: EmbeddingSpace, a: str, relation: str, b: str, margin: float) -> float:
    """Margin loss driving a corrupted filler away from the translated ball."""
    return _nf2_negative(space, a, relation, b, margin, None)


def grad_nf1(space, a, b, margin):
    grads: Grads = {}
    return _nf1(space, a, b, margin, grads), grads


def grad_nf2(space, a, relation, b, margin):
    grads: Grads = {}
    return _nf2(space, a, relation, b, margin, grads), grads


def grad_nf3(space, relation, a, b, margin):
    grads: Grads = {}
    return _nf3(space, relation, a, b, margin, grads), grads


def grad_nf4(space, a, b, c, margin):
    grads: Grads = {}
    return _nf4(space, a, b, c, margin, grads), grads


def grad_disjoint(space, a, b, margin):
    grads: Grads = {}
    return _disjoint(space, a, b, margin, grads), grads


def grad_role(space, sub, sup):
    grads: Grads = {}
    return _role(space, sub, sup, grads), grads


def grad_nf2_negative(space, a, relation, b, margin):
    grads: Grads = {}
    return _nf2_negative(space, a, relation, b, margin, grads), grads


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _axiom_loss(space, ax: NormalAxiom, margin: float, grads: Grads | None) -> float:
    if isinstance(ax, NF1):
        return _nf1(space, ax.sub, ax.sup, margin, grads)
    if isinstance(ax, NF2):
        return _nf2(space, ax.sub, ax.relation, ax.filler, margin, grads)
    if isinstance(ax, NF3):
        return _nf3(space, ax.relation, ax.filler, ax.sup, margin, grads)
    if isinstance(ax, NF4):
        if ax.sup == BOTTOM:  # And(A, B) [= Bottom is a disjointness in disguise
            return _disjoint(space, ax.left, ax.right, margin, grads)
        return _nf4(space, ax.left, ax.right, ax.sup, margin, grads)
    if isinstance(ax, Disjointness):
        return _disjoint(space, ax.left, ax.right, margin, grads)
    if isinstance(ax, RSub):
        return _role(space, ax.sub, ax.sup, grads)
    raise DataError(f"cannot embed axiom {ax!r}")


def _negative_pools(axioms: Iterable[NormalAxiom], concepts: list[str]) -> dict[str, list[str]]:
    pools: dict[str, list[str]] = {}
    for ax in axioms:
        if isinstance(ax, NF2) and ax.filler not in pools:
            pools[ax.filler] = [c for c in concepts if c != ax.filler]
    return pools


def total_loss(space: EmbeddingSpace, n: NormalizedOntology, cfg: ElTrainConfig) -> float:
    """Sum of axiom losses plus sampled NF2 corruption losses.

    Deterministic: corrupted fillers are redrawn from a generator seeded with
    ``cfg.seed`` on every call.
    """
    rng = np.random.default_rng(cfg.seed)
    concepts = sorted(space.concepts)
    pools = _negative_pools(n.axioms, concepts)
    loss = 0.0
    for ax in n.axioms:
        loss += _axiom_loss(space, ax, cfg.margin, None)
        if isinstance(ax, NF2) and cfg.negatives > 0:
            pool = pools[ax.filler]
            if pool:
                for _ in range(cfg.negatives):
                    fake = pool[int(rng.integers(len(pool)))]
                    loss += _nf2_negative(space, ax.sub, ax.relation, fake, cfg.margin, None)
    return loss


def initialize_space(n: NormalizedOntology, cfg: ElTrainConfig) -> EmbeddingSpace:
    """Seeded start: unit-sphere centers, radius 0.1, small relation vectors."""
    return _initialize(n, cfg, np.random.default_rng(cfg.seed))


def _initialize(n: NormalizedOntology, cfg: ElTrainConfig, rng: np.random.Generator) -> EmbeddingSpace:
    nominal = set(n.nominal_map.values())
    concepts: dict[str, Ball] = {}
    for name in sorted(set(n.concept_names) | {TOP, BOTTOM}):
        center = rng.normal(size=cfg.dim)
        center /= np.linalg.norm(center)
        concepts[name] = Ball(center, cfg.min_radius if name in nominal else 0.1)
    relations = {
        name: rng.uniform(-0.1, 0.1, size=cfg.dim) for name in sorted(n.relation_names)
    }
    return EmbeddingSpace(cfg.dim, concepts, relations)


def train_el(n: NormalizedOntology, cfg: ElTrainConfig) -> EmbeddingSpace:
    """Minibatch SGD over the axiom losses.

    Axioms are reshuffled every epoch; each NF2 axiom in a batch contributes
    ``cfg.negatives`` corruption terms.  Radii are clamped to ``min_radius``
    after every step and nominal-derived concepts keep exactly that radius.
    Non-finite parameters abort with the offending step index.
    """
    rng = np.random.default_rng(cfg.seed)
    space = _initialize(n, cfg, rng)
    axioms = list(n.axioms)
    if not axioms or cfg.epochs == 0:
        return space
    nominal = set(n.nominal_map.values())
    concepts = sorted(space.concepts)
    pools = _negative_pools(axioms, concepts)
    step = 0
    for _epoch in range(cfg.epochs):
        order = rng.permutation(len(axioms))
        for start in range(0, len(axioms), cfg.batch_size):
            batch = [axioms[i] for i in order[start : start + cfg.batch_size]]
            grads: Grads = {}
            for ax in batch:
                _axiom_loss(space, ax, cfg.margin, grads)
                if isinstance(ax, NF2) and cfg.negatives > 0:
                    pool = pools[ax.filler]
                    if pool:
                        for _ in range(cfg.negatives):
                            fake = pool[int(rng.integers(len(pool)))]
                            _nf2_negative(space, ax.sub, ax.relation, fake, cfg.margin, grads)
            step += 1
            scale = cfg.learning_rate / len(batch)
            for (kind, name), g in grads.items():
                if kind == "c":
                    ball = space.concepts[name]
                    ball.center = ball.center - scale * g
                    if not np.all(np.isfinite(ball.center)):
                        raise NumericalError(f"center of {name!r} diverged at step {step}")
                elif kind == "r":
                    ball = space.concepts[name]
                    radius = ball.radius - scale * float(g)
                    if not np.isfinite(radius):
                        raise NumericalError(f"radius of {name!r} diverged at step {step}")
                    ball.radius = cfg.min_radius if name in nominal else max(cfg.min_radius, radius)
                else:
                    vec = space.relations[name] - scale * g
                    if not np.all(np.isfinite(vec)):
                        raise NumericalError(f"relation {name!r} diverged at step {step}")
                    space.relations[name] = vec
    return space


# ---------------------------------------------------------------------------
# embedding file format
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_space(space: EmbeddingSpace) -> str:
    """Tab-separated rows, floats at 17 significant digits (lossless)."""
    lines = [f"#dim\t{space.dim}"]
    for name in sorted(space.concepts):
        ball = space.concepts[name]
        coords = ",".join(_fmt(v) for v in ball.center)
        lines.append(f"C\t{name}\t{coords}\t{_fmt(ball.radius)}")
    for name in sorted(space.relations):
        coords = ",".join(_fmt(v) for v in space.relations[name])
        lines.append(f"R\t{name}\t{coords}")
    return "".join(line + "\n" for line in lines)


def import_space(text: str) -> EmbeddingSpace:
    dim: int | None = None
    concepts: dict[str, Ball] = {}
    relations: dict[str, np.ndarray] = {}

    def parse_vector(raw: str, line_no: int) -> np.ndarray:
        try:
            vec = np.array([float(x) for x in raw.split(",")], dtype=float)
        except ValueError as exc:
            raise DataError(f"line {line_no}: bad vector: {exc}") from None
        if dim is not None and vec.shape != (dim,):
            raise DataError(f"line {line_no}: expected {dim} coordinates, got {vec.size}")
        return vec

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if parts[0] == "#dim":
            if len(parts) != 2:
                raise DataError(f"line {line_no}: malformed dimension header")
            dim = int(parts[1])
            continue
        if dim is None:
            raise DataError(f"line {line_no}: missing #dim header")
        if parts[0] == "C":
            if len(parts) != 4:
                raise DataError(f"line {line_no}: concept rows take 4 fields")
            concepts[parts[1]] = Ball(parse_vector(parts[2], line_no), float(parts[3]))
        elif parts[0] == "R":
            if len(parts) != 3:
                raise DataError(f"line {line_no}: relation rows take 3 fields")
            relations[parts[1]] = parse_vector(parts[2], line_no)
        else:
            raise DataError(f"line {line_no}: unknown row type {parts[0]!r}")
    if dim is None:
        raise DataError("missing #dim header")
    return EmbeddingSpace(dim, concepts, relations)
