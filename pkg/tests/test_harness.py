"""Dataset files, accuracy metrics, and the synthetic benchmark generator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ontozsl.errors import DataError
from ontozsl.harness import (
    Sample,
    gen_synthetic,
    load_dataset,
    macro_accuracy,
    parse_class_map,
    parse_features,
    parse_split,
    parse_vector_table,
    per_class_accuracy,
    sample_accuracy,
    write_class_map,
    write_features,
    write_split,
    write_vector_table,
)
from ontozsl.normalform import classify, normalize
from ontozsl.ontology import serialize_ontology, validate

SPLIT = "[seen]\ncat\ndog\n[unseen]\nzebra\n"
FEATURES = "s1\tcat\t1.0,2.0\ns2\tzebra\t3.0,4.0\n"


def test_parse_split_sections():
    seen, unseen = parse_split(SPLIT)
    assert seen == {"cat", "dog"}
    assert unseen == {"zebra"}


def test_parse_split_rejects_overlap_and_stray_lines():
    with pytest.raises(DataError):
        parse_split("[seen]\ncat\n[unseen]\ncat\n")
    with pytest.raises(DataError):
        parse_split("cat\n[seen]\n")
    with pytest.raises(DataError):
        parse_split("[wat]\ncat\n")


def test_split_round_trip_is_sorted():
    text = write_split({"dog", "cat"}, {"zebra"})
    assert text == "[seen]\ncat\ndog\n[unseen]\nzebra\n"
    assert parse_split(text) == ({"cat", "dog"}, {"zebra"})


def test_parse_features_shapes():
    dim, samples = parse_features(FEATURES)
    assert dim == 2
    assert samples[0] == Sample("s1", "cat", samples[0].features)
    assert_allclose(samples[1].features, [3.0, 4.0])


def test_parse_features_rejects_bad_rows():
    with pytest.raises(DataError):
        parse_features("s1\tcat\n")
    with pytest.raises(DataError):
        parse_features("s1\tcat\t1,2\ns2\tdog\t1,2,3\n")
    with pytest.raises(DataError):
        parse_features("")


def test_features_round_trip():
    dim, samples = parse_features(FEATURES)
    text = write_features(samples)  # canonical form: no trailing zeros
    dim2, again = parse_features(text)
    assert dim2 == dim
    assert [(s.id, s.label) for s in again] == [(s.id, s.label) for s in samples]
    for a, b in zip(again, samples):
        assert np.array_equal(a.features, b.features)
    assert write_features(again) == text


def test_load_dataset_checks_label_coverage():
    ds = load_dataset(FEATURES, SPLIT)
    assert ds.feature_dim == 2
    assert [s.id for s in ds.train_samples()] == ["s1"]
    assert [s.id for s in ds.test_samples()] == ["s2"]
    with pytest.raises(DataError):
        load_dataset("s1\tmouse\t1.0,2.0\n", SPLIT)


def test_vector_table_round_trip():
    table = {"b": np.array([1.0, 2.0]), "a": np.array([0.5, -1.0])}
    text = write_vector_table(table)
    assert text.splitlines()[0].startswith("a\t")  # sorted by label
    back = parse_vector_table(text, "attributes")
    assert set(back) == {"a", "b"}
    assert np.array_equal(back["b"], table["b"])


def test_class_map_round_trip():
    text = write_class_map({"zebra": "Zebra_Concept"})
    assert parse_class_map(text) == {"zebra": "Zebra_Concept"}
    with pytest.raises(DataError):
        parse_class_map("only-one-field\n")


def test_sample_accuracy_example():
    assert sample_accuracy(["A", "B", "B", "B"], ["A", "A", "B", "B"]) == 0.75


def test_sample_accuracy_errors():
    with pytest.raises(DataError):
        sample_accuracy([], [])
    with pytest.raises(DataError):
        sample_accuracy(["A"], ["A", "B"])


def test_per_class_and_macro_accuracy():
    preds = ["A", "B", "B", "B"]
    truth = ["A", "A", "B", "B"]
    per_class = per_class_accuracy(preds, truth, ["A", "B"])
    assert per_class == {"A": 0.5, "B": 1.0}
    assert macro_accuracy(preds, truth, ["A", "B"]) == 0.75


def test_macro_accuracy_requires_samples_for_every_class():
    with pytest.raises(DataError):
        macro_accuracy(["A"], ["A"], ["A", "Ghost"])


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(6))))
def test_macro_accuracy_ignores_sample_order(perm):
    preds = ["A", "A", "B", "B", "B", "A"]
    truth = ["A", "B", "B", "B", "A", "A"]
    shuffled_preds = [preds[i] for i in perm]
    shuffled_truth = [truth[i] for i in perm]
    assert macro_accuracy(shuffled_preds, shuffled_truth, ["A", "B"]) == macro_accuracy(
        preds, truth, ["A", "B"]
    )


def test_gen_synthetic_is_deterministic():
    a = gen_synthetic(4, 2, 5, p=8, noise=0.05, seed=3)
    b = gen_synthetic(4, 2, 5, p=8, noise=0.05, seed=3)
    assert serialize_ontology(a.ontology) == serialize_ontology(b.ontology)
    assert write_features(a.dataset.samples) == write_features(b.dataset.samples)
    assert write_vector_table(a.attributes) == write_vector_table(b.attributes)
    c = gen_synthetic(4, 2, 5, p=8, noise=0.05, seed=4)
    assert write_features(c.dataset.samples) != write_features(a.dataset.samples)


def test_gen_synthetic_ontology_is_valid_and_split_disjoint():
    data = gen_synthetic(6, 3, 4, p=10, noise=0.1, seed=0)
    assert validate(data.ontology) == []
    ds = data.dataset
    assert ds.seen_labels & ds.unseen_labels == frozenset()
    assert len(ds.seen_labels) == 6 and len(ds.unseen_labels) == 3
    counts = {}
    for s in ds.samples:
        counts[s.label] = counts.get(s.label, 0) + 1
    assert all(n == 4 for n in counts.values())
    assert len(ds.samples) == 9 * 4
    assert set(data.attributes) == ds.seen_labels | ds.unseen_labels


def test_gen_synthetic_classes_sit_under_their_groups():
    data = gen_synthetic(4, 2, 2, p=8, noise=0.0, seed=1)
    pairs = classify(normalize(data.ontology))
    group_of = {
        a: b for a, b in pairs if a.startswith("Class_") and b.startswith("Group_")
    }
    assert set(group_of) == {f"Class_{i:02d}" for i in range(6)}
    assert all((cls, "Domain") in pairs for cls in group_of)


def test_gen_synthetic_distinct_trait_sets_per_class():
    data = gen_synthetic(8, 2, 1, p=8, noise=0.0, seed=0)
    # attribute tail is the trait multi-hot; no two classes share it exactly
    tails = {label: tuple(vec) for label, vec in data.attributes.items()}
    assert len(set(tails.values())) == len(tails)


def test_gen_synthetic_rejects_nonsense():
    with pytest.raises(DataError):
        gen_synthetic(0, 2, 5)
    with pytest.raises(DataError):
        gen_synthetic(4, 2, 0)
    with pytest.raises(DataError):
        gen_synthetic(4, 2, 5, noise=-0.1)
