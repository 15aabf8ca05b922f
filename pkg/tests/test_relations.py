import json
import logging
import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import components, group_pair_mean, model_from_vectors, plain_cosine, top_k_scan

from crtk.errors import EmptyMatrixError, InputFileError, OOVError, ValidationError
from crtk.lexicon import CategoryLexicon, SynonymGroup
from crtk.relations import (
    Candidate,
    DecisionList,
    ExternalClassifier,
    SimilarityMatrix,
    expand_category,
    filter_candidates,
    group_synonyms,
    prune_nonpositive,
    relation_matrix,
)


def _g(*members):
    return SynonymGroup(members[0], members)


def _cos(m, a, b):
    return plain_cosine(m.vector(a), m.vector(b))


def _random_vectors(seed, n, d=6):
    rng = np.random.default_rng(seed)
    return {f"t{i}": rng.normal(size=d) for i in range(n)}


# expansion ----------------------------------------------------------------

def test_expand_top1_per_seed():
    vecs = {"s1": [1, 0, 0], "s2": [0, 1, 0], "x": [0.9, 0.1, 0], "y": [0.1, 0.9, 0.1], "z": [0, 0, 1]}
    cands = expand_category(model_from_vectors(vecs), CategoryLexicon("c", ("s1", "s2")), k=1)
    assert {c.token for c in cands} == {"x", "y"}
    assert {c.token: c.seed for c in cands} == {"x": "s1", "y": "s2"}


def test_shared_neighbour_listed_once_with_best_score():
    vecs = {"s1": [1, 0], "s2": [0.6, 0.8], "x": [0.8, 0.6]}
    cands = expand_category(model_from_vectors(vecs), CategoryLexicon("c", ("s1", "s2")), k=1)
    # cos(x, s1) = 0.8, cos(x, s2) = 0.96
    (c,) = cands
    assert c.token == "x" and c.seed == "s2"
    assert abs(c.score - plain_cosine(vecs["x"], vecs["s2"])) < 1e-12


def test_seeds_never_candidates():
    vecs = {"s1": [1, 0], "s2": [0.99, 0.1], "x": [0, 1]}
    cands = expand_category(model_from_vectors(vecs), CategoryLexicon("c", ("s1", "s2")), k=2)
    assert [c.token for c in cands] == ["x"]


def test_expand_matches_exhaustive_scan():
    vecs = _random_vectors(3, 40)
    seeds = ("t0", "t5", "t9")
    cands = expand_category(model_from_vectors(vecs), CategoryLexicon("c", seeds), k=6)
    expected = {}
    for s in seeds:
        for tok, score in top_k_scan(vecs, s, 6):
            if tok not in seeds and (tok not in expected or score > expected[tok][0]):
                expected[tok] = (score, s)
    assert {c.token for c in cands} == set(expected)
    for c in cands:
        assert abs(c.score - expected[c.token][0]) < 1e-9
        assert c.seed == expected[c.token][1]
    assert [c.score for c in cands] == sorted((c.score for c in cands), reverse=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 8))
def test_expand_size_bound(seed, nseeds, k):
    vecs = _random_vectors(seed, 20, 4)
    seeds = tuple(f"t{i}" for i in range(nseeds))
    cands = expand_category(model_from_vectors(vecs), CategoryLexicon("c", seeds), k=k)
    assert len(cands) <= nseeds * k
    assert len({c.token for c in cands}) == len(cands)
    assert not {c.token for c in cands} & set(seeds)


def test_unknown_seeds(caplog):
    m = model_from_vectors({"a": [1, 0], "b": [0, 1]})
    with pytest.raises(OOVError):
        expand_category(m, CategoryLexicon("c", ("zz",)))
    with caplog.at_level(logging.WARNING):
        cands = expand_category(m, CategoryLexicon("c", ("a", "zz")), k=1)
    assert [c.token for c in cands] == ["b"] and "zz" in caplog.text
    with pytest.raises(ValidationError):
        expand_category(m, CategoryLexicon("c", ("a",)), k=0)


# filtering ----------------------------------------------------------------

def test_decision_list_filter(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# verdicts\nkeep heart_rate\ndrop the_pizza  # noise\n", encoding="utf-8")
    dl = DecisionList.load(p)
    cands = [Candidate("heart_rate", 0.9, "s"), Candidate("the_pizza", 0.8, "s"), Candidate("gps", 0.7, "s")]
    res = filter_candidates(cands, dl)
    assert [c.token for c in res.kept] == ["heart_rate", "gps"]
    assert [c.token for c in res.dropped] == ["the_pizza"]
    assert res.flagged == ["gps"]


def test_decision_list_errors(tmp_path):
    with pytest.raises(InputFileError):
        DecisionList.load(tmp_path / "none.txt")
    p = tmp_path / "d.txt"
    p.write_text("keep a\nmaybe b\n", encoding="utf-8")
    with pytest.raises(ValidationError, match=":2:"):
        DecisionList.load(p)


def test_no_source_keeps_and_flags_everything():
    res = filter_candidates(["a", "b"])
    assert res.kept == ["a", "b"] and res.dropped == [] and res.flagged == ["a", "b"]


def _script(tmp_path, body):
    p = tmp_path / "clf.py"
    p.write_text(body, encoding="utf-8")
    return ExternalClassifier((sys.executable, str(p)), batch_size=2)


def test_external_classifier_drops_digit_tokens(tmp_path):
    clf = _script(tmp_path, (
        "import sys\n"
        "for line in sys.stdin:\n"
        "    t = line.strip()\n"
        "    print('drop' if any(c.isdigit() for c in t) else 'keep')\n"
    ))
    res = filter_candidates(["gps", "s1000", "heart_rate", "x2", "ecg"], clf)
    assert res.kept == ["gps", "heart_rate", "ecg"]
    assert res.dropped == ["s1000", "x2"]
    assert res.flagged == [] and res.warnings == []


@pytest.mark.parametrize("body", [
    "import sys\nsys.exit(3)\n",
    "import sys\nsys.stdin.read()\nprint('keep')\n",
    "import sys\nfor _ in sys.stdin:\n    print('perhaps')\n",
])
def test_failing_classifier_keeps_all_with_warning(tmp_path, caplog, body):
    with caplog.at_level(logging.WARNING):
        res = filter_candidates(["a", "b", "c"], _script(tmp_path, body))
    assert res.kept == ["a", "b", "c"] and res.flagged == ["a", "b", "c"]
    assert res.warnings and "classifier" in caplog.text


def test_missing_classifier_executable(tmp_path):
    res = filter_candidates(["a"], ExternalClassifier((str(tmp_path / "nope"),)))
    assert res.kept == ["a"] and res.warnings


# grouping -----------------------------------------------------------------

def test_spelling_variants_grouped_despite_orthogonal_vectors():
    m = model_from_vectors({"smartphone": [1, 0, 0], "smart-phone": [0, 1, 0], "Smart_Phone": [0, 0, 1]},
                           {"smartphone": 3, "smart-phone": 5, "Smart_Phone": 5})
    (g,) = group_synonyms(["smartphone", "smart-phone", "Smart_Phone"], m)
    assert g.members == ("smartphone", "smart-phone", "Smart_Phone")
    assert g.representative == "Smart_Phone"  # tie on 5, lexicographically smaller


def test_orthogonal_tokens_stay_apart():
    m = model_from_vectors({"a": [1, 0], "b": [0, 1]})
    groups = group_synonyms(["b", "a"], m)
    assert [g.members for g in groups] == [("b",), ("a",)]


def test_threshold_is_inclusive_and_bounds_checked():
    m = model_from_vectors({"a": [1, 0], "b": [0.5, math.sqrt(0.75)]})
    assert len(group_synonyms(["a", "b"], m, threshold=0.5 - 1e-9)) == 1
    assert len(group_synonyms(["a", "b"], m, threshold=0.5 + 1e-9)) == 2
    for bad in (0, 1, 1.5):
        with pytest.raises(ValidationError):
            group_synonyms(["a"], m, threshold=bad)


def test_grouping_unknown_token():
    with pytest.raises(OOVError):
        group_synonyms(["zz"], model_from_vectors({"a": [1, 0]}))


def test_grouping_is_single_linkage_chain():
    # a~b and b~c above threshold, a~c below: all one group
    m = model_from_vectors({"a": [1, 0], "b": [math.cos(0.5), math.sin(0.5)], "c": [math.cos(1.0), math.sin(1.0)]})
    assert _cos(m, "a", "c") < 0.7 < _cos(m, "a", "b")
    assert len(group_synonyms(["a", "b", "c"], m, 0.7)) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 25), st.sampled_from([0.2, 0.5, 0.8]))
def test_groups_are_cosine_components(seed, n, threshold):
    vecs = _random_vectors(seed, n, 3)
    m = model_from_vectors(vecs)
    tokens = list(vecs)
    groups = group_synonyms(tokens, m, threshold)
    got = [set(g.members) for g in groups]
    expected = components(tokens, lambda a, b: plain_cosine(vecs[a], vecs[b]) >= threshold)
    assert sorted(map(sorted, got)) == sorted(map(sorted, expected))
    flat = [t for g in groups for t in g.members]
    assert sorted(flat) == sorted(tokens)
    for g in groups:
        assert g.representative in g.members


# matrices -----------------------------------------------------------------

def test_singleton_groups_equal_cosine():
    vecs = {"a": [1.0, 2.0, 0.5], "b": [-0.3, 1.0, 2.0]}
    mat = relation_matrix(model_from_vectors(vecs), [_g("a")], [_g("b")])
    assert abs(mat.values[0, 0] - plain_cosine(vecs["a"], vecs["b"])) < 1e-12


def test_group_mean_hand_case():
    vecs = {"a": [1, 0, 0], "b": [0.2, math.sqrt(0.96), 0], "c": [0.4, 0, math.sqrt(0.84)]}
    mat = relation_matrix(model_from_vectors(vecs), [_g("a")], [_g("b", "c")])
    assert abs(mat.values[0, 0] - 0.3) < 1e-12


def test_matrix_matches_brute_force_and_transpose():
    vecs = _random_vectors(7, 12)
    rows = [_g("t0", "t1"), _g("t2"), _g("t3", "t4", "t5")]
    cols = [_g("t6"), _g("t7", "t8"), _g("t9", "t10", "t11"), _g("t1")]
    m = model_from_vectors(vecs)
    mat = relation_matrix(m, rows, cols, "r", "c")
    assert mat.shape == (3, 4)
    for i, ga in enumerate(rows):
        for j, gb in enumerate(cols):
            assert abs(mat.values[i, j] - group_pair_mean(vecs, ga.members, gb.members)) < 1e-12
    back = relation_matrix(m, cols, rows)
    np.testing.assert_allclose(back.values, mat.values.T, atol=1e-12)
    assert np.all(np.abs(mat.values) <= 1)


def test_self_relation_flagged():
    m = model_from_vectors({"a": [1, 0], "b": [0, 1]})
    mat = relation_matrix(m, [_g("a")], [_g("a"), _g("b")])
    assert mat.flags and "'a'" in mat.flags[0]


def test_oov_member_names_group():
    m = model_from_vectors({"a": [1, 0], "b": [0, 1]})
    with pytest.raises(OOVError, match="'b'"):
        relation_matrix(m, [_g("a")], [SynonymGroup("b", ("b", "zz"))])


def test_matrix_shape_checked():
    with pytest.raises(ValueError):
        SimilarityMatrix((_g("a"),), (_g("b"),), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        SimilarityMatrix((_g("a"),), (_g("b"),), np.zeros((1, 1)), row_order=(1,))


def test_json_round_trip():
    vecs = _random_vectors(1, 5)
    mat = relation_matrix(model_from_vectors(vecs), [_g("t0", "t1"), _g("t2")], [_g("t3"), _g("t4")], "x", "y")
    mat = SimilarityMatrix(mat.row_groups, mat.col_groups, mat.values, (1, 0), (0, 1), (0, 1), (0, 0), "x", "y")
    back = SimilarityMatrix.from_json(json.loads(json.dumps(mat.to_json())))
    assert back.row_groups == mat.row_groups and back.col_groups == mat.col_groups
    assert np.array_equal(back.values, mat.values)
    assert (back.row_order, back.col_clusters, back.row_category) == ((1, 0), (0, 0), "x")
    with pytest.raises(ValidationError):
        SimilarityMatrix.from_json({"format": "other"})


# pruning ------------------------------------------------------------------

def _mat(values):
    values = np.asarray(values, dtype=float)
    rows = [_g(f"r{i}") for i in range(values.shape[0])]
    cols = [_g(f"c{j}") for j in range(values.shape[1])]
    return SimilarityMatrix(rows, cols, values)


def test_prune_rows():
    out = prune_nonpositive(_mat([[-0.1, -0.2], [0.3, -0.5], [0.0, -0.1]]))
    assert out.row_labels == ["r1", "r2"]  # a zero maximum is kept
    np.testing.assert_array_equal(out.values, [[0.3, -0.5], [0.0, -0.1]])


def test_prune_cols():
    out = prune_nonpositive(_mat([[-0.1, 0.2], [-0.3, -0.5]]), "cols")
    assert out.col_labels == ["c1"] and out.row_labels == ["r0", "r1"]


def test_prune_everything_or_nothing():
    with pytest.raises(EmptyMatrixError):
        prune_nonpositive(_mat([[-0.1], [-0.2]]))
    m = _mat([[0.1, 0.2]])
    assert prune_nonpositive(m).row_labels == ["r0"]
    with pytest.raises(ValidationError):
        prune_nonpositive(m, "diagonal")


def test_prune_clears_ordering():
    m = _mat([[0.1], [-0.2]])
    m = SimilarityMatrix(m.row_groups, m.col_groups, m.values, (1, 0), (0,), (0, 1), (0,))
    out = prune_nonpositive(m)
    assert out.row_order is None and out.row_clusters is None
