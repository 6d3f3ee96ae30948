"""Shared generators for fuzzed ontologies and datasets."""

from __future__ import annotations

import numpy as np

from ontozsl.ontology import (
    Annotation,
    Atomic,
    Bottom,
    ConceptAssertion,
    Conjunction,
    Equivalence,
    Existential,
    Gci,
    Nominal,
    Ontology,
    RoleAssertion,
    RoleInclusion,
    Top,
)


def random_expression(rng: np.random.Generator, concepts, relations, depth, individuals=()):
    """Random concept expression with nesting depth at most ``depth``."""
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        leaf = rng.random()
        if individuals and leaf < 0.1:
            return Nominal(individuals[int(rng.integers(len(individuals)))])
        if leaf < 0.80:
            return Atomic(concepts[int(rng.integers(len(concepts)))])
        if leaf < 0.90:
            return Top()
        return Bottom()
    if roll < 0.75:
        return Conjunction(
            random_expression(rng, concepts, relations, depth - 1, individuals),
            random_expression(rng, concepts, relations, depth - 1, individuals),
        )
    return Existential(
        relations[int(rng.integers(len(relations)))],
        random_expression(rng, concepts, relations, depth - 1, individuals),
    )


def random_tbox(rng: np.random.Generator, max_concepts=8, max_depth=3) -> Ontology:
    """TBox-only ontology: inclusions, equivalences, relation inclusions."""
    concepts = [f"C{i}" for i in range(int(rng.integers(2, max_concepts + 1)))]
    relations = [f"r{i}" for i in range(int(rng.integers(1, 4)))]
    axioms = []
    for _ in range(int(rng.integers(1, 7))):
        kind = rng.random()
        if kind < 0.60:
            axioms.append(
                Gci(
                    random_expression(rng, concepts, relations, max_depth),
                    random_expression(rng, concepts, relations, max_depth),
                )
            )
        elif kind < 0.85:
            axioms.append(
                Equivalence(
                    random_expression(rng, concepts, relations, max_depth),
                    random_expression(rng, concepts, relations, max_depth),
                )
            )
        else:
            a = relations[int(rng.integers(len(relations)))]
            b = relations[int(rng.integers(len(relations)))]
            axioms.append(RoleInclusion(a, b))
    return Ontology(
        concept_names=tuple(concepts),
        relation_names=tuple(relations),
        individual_names=(),
        axioms=tuple(axioms),
    )


def random_full_ontology(rng: np.random.Generator) -> Ontology:
    """Exercises the whole statement grammar, assertions and annotations too."""
    concepts = [f"C{i}" for i in range(int(rng.integers(1, 6)))]
    relations = [f"r{i}" for i in range(int(rng.integers(1, 3)))]
    individuals = [f"ind{i}" for i in range(int(rng.integers(0, 3)))]
    axioms = []
    for _ in range(int(rng.integers(0, 8))):
        kind = rng.random()
        if kind < 0.40:
            axioms.append(
                Gci(
                    random_expression(rng, concepts, relations, 2, individuals),
                    random_expression(rng, concepts, relations, 2, individuals),
                )
            )
        elif kind < 0.55:
            axioms.append(
                Equivalence(
                    random_expression(rng, concepts, relations, 2, individuals),
                    random_expression(rng, concepts, relations, 2, individuals),
                )
            )
        elif kind < 0.65:
            a = relations[int(rng.integers(len(relations)))]
            b = relations[int(rng.integers(len(relations)))]
            axioms.append(RoleInclusion(a, b))
        elif kind < 0.75 and individuals:
            axioms.append(
                ConceptAssertion(
                    individuals[int(rng.integers(len(individuals)))],
                    random_expression(rng, concepts, relations, 2, individuals),
                )
            )
        elif kind < 0.85 and individuals:
            axioms.append(
                RoleAssertion(
                    relations[int(rng.integers(len(relations)))],
                    individuals[int(rng.integers(len(individuals)))],
                    individuals[int(rng.integers(len(individuals)))],
                )
            )
        else:
            entity = concepts[int(rng.integers(len(concepts)))]
            kind_name = "label" if rng.random() < 0.5 else "comment"
            words = ["alpha", "beta", 'ga"mma', "delta\\x"]
            text = " ".join(
                words[int(rng.integers(len(words)))] for _ in range(int(rng.integers(1, 4)))
            )
            axioms.append(Annotation(entity, kind_name, text))
    return Ontology(
        concept_names=tuple(concepts),
        relation_names=tuple(relations),
        individual_names=tuple(individuals),
        axioms=tuple(axioms),
    )


def count_complex_subexpressions(o: Ontology) -> int:
    """Distinct conjunction/existential subtrees across every logical axiom."""
    seen = set()

    def walk(expr):
        if isinstance(expr, (Conjunction, Existential)):
            seen.add(expr)
        if isinstance(expr, Conjunction):
            walk(expr.left)
            walk(expr.right)
        elif isinstance(expr, Existential):
            walk(expr.filler)

    for ax in o.axioms:
        if isinstance(ax, Gci):
            walk(ax.sub)
            walk(ax.sup)
        elif isinstance(ax, Equivalence):
            walk(ax.left)
            walk(ax.right)
        elif isinstance(ax, ConceptAssertion):
            walk(ax.concept)
    return len(seen)


def flatten_by_definitions(o: Ontology) -> Ontology:
    """Name every complex subexpression with an explicit DEF equivalence.

    The result proves the same subsumptions between the original concept
    names but normalizes without any machinery for nested expressions, which
    makes it an oracle for the rewriting route.
    """
    defs: dict = {}
    extra_axioms = []
    new_concepts = list(o.concept_names)

    def name_of(expr) -> Atomic | Top | Bottom:
        if isinstance(expr, (Atomic, Top, Bottom)):
            return expr
        if expr in defs:
            return Atomic(defs[expr])
        if isinstance(expr, Conjunction):
            shallow = Conjunction(name_of(expr.left), name_of(expr.right))
        else:
            shallow = Existential(expr.relation, name_of(expr.filler))
        fresh = f"DEF_{len(defs)}"
        defs[expr] = fresh
        new_concepts.append(fresh)
        extra_axioms.append(Equivalence(Atomic(fresh), shallow))
        return Atomic(fresh)

    flat_axioms = []
    for ax in o.axioms:
        if isinstance(ax, Gci):
            flat_axioms.append(Gci(name_of(ax.sub), name_of(ax.sup)))
        elif isinstance(ax, Equivalence):
            flat_axioms.append(Equivalence(name_of(ax.left), name_of(ax.right)))
        else:
            flat_axioms.append(ax)
    return Ontology(
        concept_names=tuple(new_concepts),
        relation_names=o.relation_names,
        individual_names=o.individual_names,
        axioms=tuple(extra_axioms + flat_axioms),
    )
