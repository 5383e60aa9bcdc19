import json
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cohomflow.weight_config import (
    ConfigError,
    Configuration,
    WeightKind,
    builtin_catalog,
    catalog_entry,
    classify_weight,
    config_from_dict,
    config_hash,
    config_to_dict,
    load_config,
    negative_controls,
    scalar_curvature,
    validate,
)


def test_classify_examples():
    assert classify_weight((-1, 0, 0)).kind is WeightKind.TypeI
    assert classify_weight((1, -1, -1)).kind is WeightKind.TypeII
    assert classify_weight((1, 0, -2)).kind is WeightKind.TypeIII
    assert classify_weight((1, 1, -3)).kind is WeightKind.Other
    assert classify_weight((0, 0)).kind is WeightKind.Other


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=5), st.randoms())
def test_classify_permutation_invariant(w, rnd):
    perm = list(range(len(w)))
    rnd.shuffle(perm)
    assert classify_weight(w).kind == classify_weight([w[i] for i in perm]).kind


def test_admissible_kinds_sum_to_minus_one():
    for w in [(-1, 0), (1, -1, -1), (0, 1, -2)]:
        v = classify_weight(w)
        assert v.kind is not WeightKind.Other and sum(v.entries) == -1


def test_validate_examples():
    rep = validate(catalog_entry("bbc-case5"))
    assert rep.hull_dim == 2 and rep.full_measure
    rep = validate(catalog_entry("bryant5"))
    assert rep.hull_dim == 0 and rep.full_measure
    cfg = Configuration((2, 2), (((-1, 0), 1),), 1)
    rep = validate(cfg)
    assert not rep.full_measure and rep.uncovered_coordinates == [2]


def test_catalog_full_measure():
    for cfg in builtin_catalog():
        if cfg.name == "bryant-n1":
            # W is empty for the two-dimensional family
            assert validate(cfg).hull_dim == -1
            continue
        assert validate(cfg).full_measure, cfg.name


def test_other_weights_flagged():
    cfg = Configuration((1, 1), (((1, 1), 2), ((-1, 0), 1)))
    assert validate(cfg).other_weights == [(1, 1)]


def test_scalar_curvature_examples():
    bryant = Configuration((5,), (((-1,), 20),))
    assert scalar_curvature(bryant, [0.0]) == 20
    assert scalar_curvature(Configuration((3,)), [1.0]) == 0
    assert scalar_curvature(catalog_entry("bbc-case5"), [0, 0, 0]) == 7
    assert scalar_curvature(bryant, [-1000.0]) == math.inf


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-2, 2))
def test_scalar_curvature_diagonal_shift(q, t):
    cfg = catalog_entry("bbc-case5")
    shifted = [x + t for x in q]
    assert math.isclose(scalar_curvature(cfg, shifted), math.exp(-t) * scalar_curvature(cfg, q), rel_tol=1e-9, abs_tol=1e-9)


def test_catalog_entries():
    b = catalog_entry("bryant5")
    assert b.r == 1 and b.dims == (4,) and b.weight_map == {(-1,): 12}
    c = catalog_entry("bbc-case5")
    assert c.dims == (1, 2, 2)
    assert set(c.weight_map) == {(0, -1, 0), (0, 0, -1), (1, -2, 0), (1, 0, -2)}
    w = catalog_entry("warped-2x2")
    assert set(w.weight_map) == {(-1, 0), (0, -1)}
    assert {cfg.name for cfg in negative_controls()} == {"bryant-n3", "warped-2x2-expanding"}


def test_bbc_catalog_ratio():
    for name in ("bbc-r2", "bbc-r3", "bbc-case5"):
        cfg = catalog_entry(name)
        wm = cfg.weight_map
        ratios = set()
        for i in range(1, cfg.r):
            e1 = tuple(-1 if j == i else 0 for j in range(cfg.r))
            e3 = tuple(1 if j == 0 else (-2 if j == i else 0) for j in range(cfg.r))
            ratios.add(wm[e1] ** 2 / (cfg.dims[i] * wm[e3]))
        assert len(ratios) == 1, name


def test_configuration_invariants():
    with pytest.raises(ConfigError):
        Configuration((1, 2), (((-1, 0), 0),))
    with pytest.raises(ConfigError):
        Configuration((1, 2), (((-1, 0), 1), ((-1, 0), 2)))
    with pytest.raises(ConfigError):
        Configuration((0,))


def test_json_roundtrip(tmp_path):
    for cfg in builtin_catalog() + negative_controls():
        d = config_to_dict(cfg)
        back = config_from_dict(json.loads(json.dumps(d)))
        assert back.weight_map == cfg.weight_map and back.E == cfg.E and back.lam == cfg.lam
        assert config_hash(back) == config_hash(cfg)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_to_dict(catalog_entry("bryant5"))))
    assert load_config(str(path)).weight_map == {(-1,): 12}


@pytest.mark.parametrize("bad", [
    {"r": 1, "dims": [4], "weights": [{"vec": [-1], "A": "1/0"}], "E": "1", "lambda": "0"},
    {"r": 1, "dims": [4], "weights": [{"vec": [-1], "A": 0.5}], "E": "1", "lambda": "0"},
    {"r": 2, "dims": [4], "weights": [], "E": "1", "lambda": "0"},
    {"r": 1, "dims": [4], "weights": [{"vec": [-1, 0], "A": "1"}], "E": "1", "lambda": "0"},
    {"r": 1, "dims": [4], "weights": [], "E": "x", "lambda": "0"},
    {"dims": [4], "weights": [], "E": "1", "lambda": "0"},
])
def test_schema_errors(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_with_weights():
    cfg = catalog_entry("bbc-case5").with_weights(**{"1,-2,0": "-1/4"})
    assert cfg.weight_map[(1, -2, 0)] == F(-1, 4)
