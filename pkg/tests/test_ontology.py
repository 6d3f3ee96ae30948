"""Parser, serializer, and structural validation."""

import numpy as np
import pytest

from conftest import random_full_ontology
from ontozsl.errors import ElfError
from ontozsl.ontology import (
    Annotation,
    Atomic,
    Conjunction,
    Equivalence,
    Existential,
    Gci,
    Nominal,
    Ontology,
    RoleComposition,
    Top,
    Violation,
    expression_text,
    parse_ontology,
    serialize_ontology,
    validate,
)


def test_parse_minimal_inclusion():
    o = parse_ontology("Concept(A)\nConcept(B)\nSubClassOf(A B)")
    assert o.concept_names == ("A", "B")
    assert o.axioms == (Gci(Atomic("A"), Atomic("B")),)


def test_parse_definition_with_conjunction_and_existential():
    text = (
        "Concept(Killer_Whale)\nConcept(Toothed_Whale)\nConcept(Patches)\n"
        "Relation(hasTexture)\n"
        "EquivalentTo(Killer_Whale And(Toothed_Whale Some(hasTexture Patches)))\n"
    )
    o = parse_ontology(text)
    assert o.axioms == (
        Equivalence(
            Atomic("Killer_Whale"),
            Conjunction(Atomic("Toothed_Whale"), Existential("hasTexture", Atomic("Patches"))),
        ),
    )


def test_nary_conjunction_folds_to_the_right():
    text = "Concept(A)\nConcept(B)\nConcept(C)\nConcept(D)\nSubClassOf(And(A B C) D)\n"
    o = parse_ontology(text)
    assert o.axioms[0].sub == Conjunction(Atomic("A"), Conjunction(Atomic("B"), Atomic("C")))


def test_comments_and_blank_lines_are_skipped():
    o = parse_ontology("# header\n\nConcept(A)  # trailing\n\n# done\n")
    assert o.concept_names == ("A",)
    assert o.axioms == ()


def test_top_bottom_and_nominals_parse():
    text = (
        "Concept(A)\nRelation(r)\nIndividual(a)\n"
        "SubClassOf(A Top)\nSubClassOf(Bottom A)\nSubClassOf(A Some(r One(a)))\n"
    )
    o = parse_ontology(text)
    assert o.axioms[0].sup == Top()
    assert o.axioms[2].sup == Existential("r", Nominal("a"))


def test_relation_chain_parses_into_composition():
    text = "Relation(r)\nRelation(s)\nRelation(t)\nRelationChain(r s -> t)\n"
    o = parse_ontology(text)
    assert o.axioms == (RoleComposition(("r", "s"), "t"),)


def test_undeclared_name_error_carries_position():
    with pytest.raises(ElfError) as err:
        parse_ontology("SubClassOf(A B)")
    assert err.value.line == 1
    assert err.value.col == 12
    assert "undeclared" in str(err.value)


def test_declaration_must_precede_use():
    with pytest.raises(ElfError):
        parse_ontology("SubClassOf(A B)\nConcept(A)\nConcept(B)\n")


def test_reserved_names_rejected_in_declarations():
    for bad in ("Top", "Bottom", "And", "Some", "One", "subClassOf"):
        with pytest.raises(ElfError):
            parse_ontology(f"Concept({bad})")


def test_duplicate_declaration_rejected():
    with pytest.raises(ElfError):
        parse_ontology("Concept(A)\nConcept(A)\n")
    with pytest.raises(ElfError):
        parse_ontology("Concept(A)\nRelation(A)\n")


def test_malformed_name_rejected():
    with pytest.raises(ElfError):
        parse_ontology("Concept(1abc)")


def test_unterminated_string_rejected():
    with pytest.raises(ElfError) as err:
        parse_ontology('Concept(A)\nLabel(A "oops)')
    assert err.value.line == 2


def test_conjunction_needs_two_arguments():
    with pytest.raises(ElfError):
        parse_ontology("Concept(A)\nConcept(B)\nSubClassOf(And(A) B)\n")


def test_junk_after_statement_rejected():
    with pytest.raises(ElfError):
        parse_ontology("Concept(A) Concept(B)")


def test_serialize_empty_ontology_is_empty_string():
    assert serialize_ontology(Ontology((), (), (), ())) == ""


def test_serialize_minimal_inclusion_exact_text():
    o = parse_ontology("Concept(A)\nConcept(B)\nSubClassOf(A B)")
    assert serialize_ontology(o) == "Concept(A)\nConcept(B)\nSubClassOf(A B)\n"


def test_serialize_flattens_nested_conjunction_spine():
    expr = Conjunction(Atomic("A"), Conjunction(Atomic("B"), Atomic("C")))
    assert expression_text(expr) == "And(A B C)"


def test_parse_serialize_round_trip_fuzzed():
    rng = np.random.default_rng(7)
    for _ in range(200):
        o = random_full_ontology(rng)
        text = serialize_ontology(o)
        back = parse_ontology(text)
        assert back == o
        assert serialize_ontology(back) == text


def test_validate_accepts_generated_ontologies():
    rng = np.random.default_rng(8)
    for _ in range(50):
        assert validate(random_full_ontology(rng)) == []


def test_validate_flags_unresolved_axiom_names():
    o = Ontology(("A",), (), (), (Gci(Atomic("A"), Atomic("Ghost")),))
    problems = validate(o)
    assert problems and problems[0].axiom_index == 0
    assert "Ghost" in problems[0].reason


def test_validate_flags_duplicate_and_reserved_signature_names():
    dup = Ontology(("A", "A"), (), (), ())
    assert any("declared twice" in v.reason or "duplicate" in v.reason for v in validate(dup))
    reserved = Ontology(("And",), (), (), ())
    assert validate(reserved)


def test_validate_flags_bad_annotation():
    o = Ontology(("A",), (), (), (Annotation("A", "color", "blue"),))
    assert validate(o)
    empty = Ontology(("A",), (), (), (Annotation("A", "label", ""),))
    assert validate(empty)


def test_validate_flags_empty_relation_chain():
    o = Ontology((), ("t",), (), (RoleComposition((), "t"),))
    assert validate(o)


def test_violation_is_plain_record():
    v = Violation(3, "whatever")
    assert (v.axiom_index, v.reason) == (3, "whatever")
