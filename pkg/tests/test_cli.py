"""Exit codes and subcommand behaviour, driven in-process through main()."""

import numpy as np
import pytest

from ontozsl import harness, zslmap
from ontozsl.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main

GOOD_ONTOLOGY = """Concept(A)
Concept(B)
Concept(C)
Relation(r)
SubClassOf(A Some(r B))
SubClassOf(B C)
Label(A "alpha")
"""


@pytest.fixture
def elf(tmp_path):
    path = tmp_path / "o.elf"
    path.write_text(GOOD_ONTOLOGY)
    return str(path)


def test_no_arguments_shows_help(capsys):
    assert main([]) == EXIT_USAGE
    assert "command" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE


def test_parse_round_trips_to_stdout(elf, capsys):
    assert main(["parse", elf]) == EXIT_OK
    out = capsys.readouterr().out
    assert "SubClassOf(A Some(r B))" in out
    assert out.startswith("Concept(A)\n")


def test_parse_reports_error_positions(tmp_path, capsys):
    path = tmp_path / "bad.elf"
    path.write_text("SubClassOf(A B)\n")
    assert main(["parse", str(path)]) == EXIT_DATA
    assert "line 1" in capsys.readouterr().err


def test_missing_file_is_a_data_error(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "nope.elf")]) == EXIT_DATA
    assert "not found" in capsys.readouterr().err


def test_normalize_then_classify_from_file(elf, tmp_path, capsys):
    normalized = tmp_path / "n.txt"
    assert main(["normalize", elf, "--out", str(normalized)]) == EXIT_OK
    assert "NF2 A r B" in normalized.read_text()
    assert main(["classify", "--normalized", str(normalized)]) == EXIT_OK
    pairs = {tuple(l.split("\t")) for l in capsys.readouterr().out.splitlines()}
    assert ("B", "C") in pairs
    assert ("A", "C") not in pairs  # existential on the left does not chain


def test_classify_requires_an_input(capsys):
    assert main(["classify"]) == EXIT_USAGE
    assert "ontology or" in capsys.readouterr().err


def test_classify_straight_from_ontology(elf, capsys):
    assert main(["classify", "--ontology", elf]) == EXIT_OK
    assert "B\tC" in capsys.readouterr().out


def test_project_lists_sorted_edges(elf, capsys):
    assert main(["project", elf]) == EXIT_OK
    assert capsys.readouterr().out == "A\tr\tB\nB\tsubClassOf\tC\n"


def test_walk_writes_both_corpus_and_raw(elf, tmp_path, capsys):
    raw = tmp_path / "raw.txt"
    code = main(["walk", elf, "--raw-out", str(raw), "--walks-per-node", "2", "--seed", "1"])
    assert code == EXIT_OK
    assert "alpha" in capsys.readouterr().out  # label lexicalization applied
    for line in raw.read_text().splitlines():
        assert line.split()[0] in {"A", "B", "C"}


def test_w2v_requires_a_corpus(capsys):
    assert main(["w2v"]) == EXIT_USAGE


def test_encode_rejects_unknown_component(tmp_path, capsys):
    labels = tmp_path / "labels.txt"
    labels.write_text("A\n")
    assert main(["encode", "--labels", str(labels), "--components", "plasma"]) == EXIT_DATA
    assert "plasma" in capsys.readouterr().err


def test_eval_rejects_malformed_predictions(tmp_path, capsys):
    split = tmp_path / "s.txt"
    split.write_text("[seen]\na\n[unseen]\nb\n")
    preds = tmp_path / "p.tsv"
    preds.write_text("x1\tb\n")
    assert main(["eval", "--predictions", str(preds), "--split", str(split)]) == EXIT_DATA
    assert "line 1" in capsys.readouterr().err


def test_pipeline_set_needs_key_value(capsys):
    assert main(["pipeline", "--set", "el_dim"]) == EXIT_USAGE
    assert "el_dim" in capsys.readouterr().err


def test_pipeline_unknown_key_is_a_data_error(capsys):
    assert main(["pipeline", "--set", "warp_drive=1"]) == EXIT_DATA


def test_predict_cosine_zero_vector_is_numerical(tmp_path, capsys):
    features = tmp_path / "f.tsv"
    features.write_text(harness.write_features([harness.Sample("x1", "b", np.array([1.0, 2.0]))]))
    split = tmp_path / "s.txt"
    split.write_text(harness.write_split({"a"}, {"b"}))
    table = zslmap.EncodingTable(
        (zslmap.Component.EL_CENTER,),
        2,
        {"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])},
    )
    encodings = tmp_path / "e.tsv"
    encodings.write_text(zslmap.save_encodings(table))
    model = tmp_path / "m.txt"
    model.write_text(zslmap.save_model(np.zeros((2, 2)), alpha=1e-3))
    code = main(
        [
            "predict",
            "--features", str(features),
            "--split", str(split),
            "--encodings", str(encodings),
            "--model", str(model),
            "--distance", "cosine",
        ]
    )
    assert code == EXIT_NUMERIC
    assert "zero" in capsys.readouterr().err.lower()


def test_full_command_chain(tmp_path, capsys):
    data_dir = tmp_path / "data"
    assert main(
        [
            "synth",
            "--k-seen", "3",
            "--k-unseen", "1",
            "--per-class", "4",
            "--features-dim", "8",
            "--out-dir", str(data_dir),
        ]
    ) == EXIT_OK

    elf = str(data_dir / "ontology.elf")
    normalized = tmp_path / "n.txt"
    assert main(["normalize", elf, "--out", str(normalized)]) == EXIT_OK

    space = tmp_path / "space.tsv"
    assert main(
        [
            "embed-el",
            "--normalized", str(normalized),
            "--out", str(space),
            "--dim", "8",
            "--epochs", "60",
            "--batch", "16",
        ]
    ) == EXIT_OK

    corpus = tmp_path / "corpus.txt"
    assert main(["walk", elf, "--out", str(corpus), "--walks-per-node", "3"]) == EXIT_OK

    vectors = tmp_path / "vecs.txt"
    assert main(
        ["w2v", "--corpus", str(corpus), "--out", str(vectors), "--dim", "5", "--epochs", "2"]
    ) == EXIT_OK

    seen, unseen = harness.parse_split((data_dir / "split.txt").read_text())
    labels = tmp_path / "labels.txt"
    labels.write_text("".join(name + "\n" for name in sorted(seen | unseen)))
    encodings = tmp_path / "e.tsv"
    assert main(
        [
            "encode",
            "--labels", str(labels),
            "--components", "el_center",
            "--space", str(space),
            "--out", str(encodings),
        ]
    ) == EXIT_OK

    model = tmp_path / "model.txt"
    assert main(
        [
            "train-map",
            "--features", str(data_dir / "features.tsv"),
            "--split", str(data_dir / "split.txt"),
            "--encodings", str(encodings),
            "--mapper", "ridge",
            "--alpha", "1e-6",
            "--out", str(model),
        ]
    ) == EXIT_OK

    predictions = tmp_path / "preds.tsv"
    assert main(
        [
            "predict",
            "--features", str(data_dir / "features.tsv"),
            "--split", str(data_dir / "split.txt"),
            "--encodings", str(encodings),
            "--model", str(model),
            "--out", str(predictions),
        ]
    ) == EXIT_OK
    lines = predictions.read_text().splitlines()
    assert len(lines) == 4  # one per unseen test sample
    assert all(len(line.split("\t")) == 3 for line in lines)

    capsys.readouterr()
    assert main(
        ["eval", "--predictions", str(predictions), "--split", str(data_dir / "split.txt")]
    ) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("macro_unseen_accuracy\t")
    macro = float(out.splitlines()[0].split("\t")[1])
    assert 0.0 <= macro <= 1.0


def test_pipeline_subcommand_runs_from_config(tmp_path, capsys):
    data_dir = tmp_path / "data"
    assert main(["synth", "--k-seen", "3", "--k-unseen", "1", "--per-class", "3",
                 "--features-dim", "8", "--out-dir", str(data_dir)]) == EXIT_OK
    config = tmp_path / "run.cfg"
    config.write_text(
        f"""# tiny smoke run
ontology = {data_dir / 'ontology.elf'}
features = {data_dir / 'features.tsv'}
split = {data_dir / 'split.txt'}
attributes = {data_dir / 'attributes.tsv'}
out_dir = {tmp_path / 'run'}
el_dim = 8
el_epochs = 40
walks_per_node = 3
w2v_dim = 5
w2v_epochs = 2
sae_max_iters = 500
"""
    )
    assert main(["pipeline", "--config", str(config), "--set", "seed=1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("macro_unseen_accuracy\t")
    assert (tmp_path / "run" / "report.json").exists()
