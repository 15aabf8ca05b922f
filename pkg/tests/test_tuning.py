import csv
import io
import json

import numpy as np
import pytest
from oracles import model_from_vectors, plain_cosine

from crtk.embedding import TrainConfig
from crtk.errors import DataError, InputFileError, ValidationError
from crtk.lexicon import SynonymPairList
from crtk.preprocess import TokenStream
from crtk.tuning import grid_search, load_grid, product_grid, synonym_objective

SMALL = TrainConfig(vector_size=8, window=2, min_count=1, epochs=2, subsample_t=0)


def _stream(*sentences):
    return TokenStream(tuple(tuple(s.split()) for s in sentences))


def _long_range_corpus(pairs=30, reps=30):
    # a_i and b_i only share the token three positions away, their
    # immediate neighbours are private to each of them
    rng = np.random.default_rng(0)
    sents = []
    for _ in range(reps):
        for i in rng.permutation(pairs):
            for tok in (f"a{i}", f"b{i}"):
                sents.append((f"c{i}", f"u{tok}", tok, f"v{tok}", f"c{i}"))
    return [TokenStream(tuple(sents))], SynonymPairList(tuple((f"a{i}", f"b{i}") for i in range(pairs)))


def test_identical_vectors_give_one():
    m = model_from_vectors({"x": [0.3, -1.2, 2.0], "y": [0.3, -1.2, 2.0]})
    res = synonym_objective(m, [("x", "y")])
    assert res.value == 1.0 and res.used == 1


def test_two_pair_hand_mean():
    # cos = 0.6 and 0.8 by construction
    m = model_from_vectors({"a": [1, 0], "b": [0.6, 0.8], "c": [0, 1], "d": [0.6, 0.8]})
    res = synonym_objective(m, [("a", "b"), ("c", "d")])
    assert abs(res.value - 0.7) < 1e-12


def test_oov_pairs_skipped_and_counted():
    vecs = {"a": [1.0, 2.0], "b": [2.0, 1.0]}
    res = synonym_objective(model_from_vectors(vecs), [("a", "b"), ("a", "zz")])
    assert (res.used, res.skipped) == (1, 1)
    assert abs(res.value - plain_cosine(vecs["a"], vecs["b"])) < 1e-12


def test_all_pairs_oov():
    with pytest.raises(DataError):
        synonym_objective(model_from_vectors({"a": [1.0, 0.0]}), [("q", "r")])


def test_single_cell_grid():
    streams = [_stream("a b c a b c", "b c a")]
    rep = grid_search(streams, [SMALL], [("a", "b")])
    assert rep.best == 0 and len(rep.rows) == 1
    assert rep.best_config == SMALL


def test_failed_cell_recorded_others_continue():
    streams = [_stream("a b c a b c", "b c a")]
    grid = [SMALL, SMALL.with_overrides(min_count=1000), SMALL.with_overrides(window=1)]
    rep = grid_search(streams, grid, [("a", "b")])
    assert rep.rows[1].failed and rep.rows[1].objective is None
    assert not rep.rows[0].failed and not rep.rows[2].failed
    assert rep.best in (0, 2)


def test_every_cell_failing_raises():
    with pytest.raises(DataError, match="every"):
        grid_search([_stream("a b")], [SMALL.with_overrides(min_count=5)], [("a", "b")])


def test_empty_grid_rejected():
    with pytest.raises(ValidationError):
        grid_search([_stream("a b")], [], [("a", "b")])


def test_larger_window_wins_on_long_range_corpus():
    streams, pairs = _long_range_corpus()
    base = TrainConfig(vector_size=20, epochs=20, min_count=1, subsample_t=0)
    rep = grid_search(streams, product_grid(base, window=[1, 3]), pairs)
    assert rep.rows[1].objective > rep.rows[0].objective
    assert rep.best_config.window == 3


def test_best_is_first_maximum():
    streams = [_stream("a b c a b c", "b c a")]
    rep = grid_search(streams, [SMALL, SMALL], [("a", "b")])
    assert rep.rows[0].objective == rep.rows[1].objective
    assert rep.best == 0


def test_reproducible():
    streams, pairs = _long_range_corpus(pairs=5, reps=4)
    grid = product_grid(SMALL, window=[1, 2])
    a = grid_search(streams, grid, pairs)
    b = grid_search(streams, grid, pairs)
    assert a.to_json(include_timing=False) == b.to_json(include_timing=False)
    assert a.to_csv(include_timing=False) == b.to_csv(include_timing=False)


def test_on_model_callback():
    seen = []
    grid_search([_stream("a b c a b c")], product_grid(SMALL, window=[1, 2]), [("a", "b")],
                on_model=lambda i, m: seen.append((i, m.dim)))
    assert seen == [(0, 8), (1, 8)]


def test_report_serialization():
    streams = [_stream("a b c a b c", "b c a")]
    rep = grid_search(streams, [SMALL, SMALL.with_overrides(min_count=1000)], [("a", "b")])
    data = json.loads(json.dumps(rep.to_json()))
    assert data["best"] == 0
    assert data["rows"][1]["error"] and data["rows"][0]["objective"] == rep.rows[0].objective
    assert "wall_time" in data["rows"][0]
    assert "wall_time" not in rep.to_json(include_timing=False)["rows"][0]

    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert [r["status"] for r in rows][0] == "best"
    assert rows[1]["status"].startswith("failed")
    assert float(rows[0]["objective"]) == rep.rows[0].objective
    assert rows[0]["window"] == "2"


def test_product_grid_order():
    grid = product_grid(SMALL, window=[5, 10], vector_size=[50, 100, 200])
    assert [(c.window, c.vector_size) for c in grid] == [
        (5, 50), (5, 100), (5, 200), (10, 50), (10, 100), (10, 200)]
    assert all(c.epochs == SMALL.epochs for c in grid)


def test_load_grid(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps([{"window": 3}, {"vector_size": 4, "epochs": 1}]), encoding="utf-8")
    grid = load_grid(p, SMALL)
    assert grid[0] == SMALL.with_overrides(window=3)
    assert (grid[1].vector_size, grid[1].epochs, grid[1].window) == (4, 1, 2)


def test_load_grid_errors(tmp_path):
    with pytest.raises(InputFileError):
        load_grid(tmp_path / "missing.json", SMALL)
    p = tmp_path / "g.json"
    p.write_text('{"window": 3}', encoding="utf-8")
    with pytest.raises(ValidationError):
        load_grid(p, SMALL)
    p.write_text('[{"windows": 3}]', encoding="utf-8")
    with pytest.raises(ValidationError, match="windows"):
        load_grid(p, SMALL)
    p.write_text("[{", encoding="utf-8")
    with pytest.raises(ValidationError, match="line 1"):
        load_grid(p, SMALL)


def test_example_grid_is_five_by_five():
    from importlib import resources

    path = resources.files("crtk").joinpath("data", "example_grid.json")
    grid = load_grid(str(path), TrainConfig())
    assert len(grid) == 25
    assert sorted({c.window for c in grid}) == [5, 10, 15, 20, 25]
    assert sorted({c.vector_size for c in grid}) == [50, 100, 200, 300, 400]
