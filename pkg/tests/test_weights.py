import json

import numpy as np
import pytest

from twoweight.circle import CircleGrid
from twoweight.weights import (FIXTURE_NAMES, MatrixWeight, fixture, fixtures,
                               koosis_transform, load_weight_spec,
                               muckenhoupt_sup, normalize,
                               random_polynomial_weight, save_weight_spec,
                               schatten_norm, weight_spec_document)

RNG = np.random.default_rng(2024)


def test_fixture_names_and_normalization():
    assert FIXTURE_NAMES == ("W_CONST", "W_COS", "W_DIAG", "W_RANK1")
    for name, w in fixtures().items():
        grid = w.natural_grid()
        samples = w.samples_on(grid)
        norms = np.array([schatten_norm(s, w.schatten_p) for s in samples])
        assert abs(norms.mean() - 1.0) < 1e-12, name


def test_fixture_values():
    grid = CircleGrid(64)
    cos = fixture("W_COS").samples_on(grid)[:, 0, 0].real
    assert np.abs(cos - (1.0 + np.cos(grid.nodes))).max() < 1e-12
    diag = fixture("W_DIAG").samples_on(grid)
    assert np.abs(diag - np.diag([0.6, 0.8])).max() < 1e-12
    rank1 = fixture("W_RANK1").samples_on(grid)
    lam = np.linalg.eigvalsh(rank1)
    assert np.all(lam[:, 0] < 1e-12)  # rank one at every node


def test_unknown_fixture():
    with pytest.raises(ValueError):
        fixture("W_NOPE")


def test_from_samples_rejects_non_hermitian_and_non_psd():
    skew = np.tile(np.array([[0.0, 1.0], [-1.0, 0.0]])[None], (16, 1, 1))
    with pytest.raises(ValueError, match="Hermitian"):
        MatrixWeight.from_samples(skew + np.eye(2))
    indef = np.tile(np.diag([1.0, -1.0])[None], (16, 1, 1))
    with pytest.raises(ValueError, match="positive semidefinite"):
        MatrixWeight.from_samples(indef)


def test_normalize_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        normalize(MatrixWeight.from_samples(np.zeros((16, 1, 1))))


def test_value_at_matches_samples():
    w = fixture("W_COS")
    grid = CircleGrid(64)
    direct = w.value_at(grid.nodes)
    assert np.abs(direct - w.samples_on(grid)).max() < 1e-12


def test_spec_roundtrip(tmp_path):
    for name in FIXTURE_NAMES:
        w = fixture(name)
        path = tmp_path / f"{name}.json"
        save_weight_spec(w, path)
        back = load_weight_spec(path)
        grid = w.natural_grid()
        assert np.abs(back.samples_on(grid) - w.samples_on(grid)).max() < 1e-15
        assert back.schatten_p == w.schatten_p


def test_spec_document_is_json_ready():
    doc = weight_spec_document(fixture("W_DIAG"))
    text = json.dumps(doc, sort_keys=True)
    assert '"dim": 2' in text


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 1, "kind": "nonsense", "data": []}))
    with pytest.raises(ValueError):
        load_weight_spec(path)
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_weight_spec(path)


def test_koosis_roundtrip_and_infinity():
    grid = CircleGrid(64)
    v0 = 1.5 + np.cos(grid.nodes)
    w, c = koosis_transform(v0, "forward", grid)
    assert abs(np.array([schatten_norm(s, 1) for s in w.values]).mean() - 1.0) < 1e-12
    back, _ = koosis_transform(w.values[:, 0, 0].real, "backward", grid, constant=c)
    assert np.abs(back - v0).max() < 1e-12 * np.abs(v0).max()

    v0_inf = v0.copy()
    v0_inf[3] = np.inf  # legal: maps to a zero of the inverse weight
    w_inf, _ = koosis_transform(v0_inf, "forward", grid)
    assert w_inf.values[3, 0, 0] == 0.0


def test_koosis_rejects_vanishing_samples():
    grid = CircleGrid(64)
    v0 = np.ones(grid.size)
    v0[5] = 0.0
    with pytest.raises(ValueError, match="vanishes"):
        koosis_transform(v0, "forward", grid)
    with pytest.raises(ValueError):
        koosis_transform(v0, "backward", grid, constant=1.0)


def test_muckenhoupt_sup():
    grid = CircleGrid(256)
    assert abs(muckenhoupt_sup(np.ones(grid.size), grid) - 1.0) < 1e-12
    bumpy = muckenhoupt_sup(1.2 + np.cos(grid.nodes), grid)
    assert bumpy > 1.0
    with np.errstate(divide="ignore"):
        singular = 1.0 / (1.0 + np.cos(grid.nodes))
    # blocks containing the infinite sample are excluded, the sup stays finite
    assert np.isfinite(muckenhoupt_sup(singular, grid))


def test_random_polynomial_weight_is_psd_and_normalized():
    for dim in (1, 2, 3):
        w = random_polynomial_weight(RNG, dim)
        grid = w.natural_grid()
        samples = w.samples_on(grid)
        lam = np.linalg.eigvalsh(samples)
        assert lam.min() > -1e-10
        norms = np.array([schatten_norm(s, w.schatten_p) for s in samples])
        assert abs(norms.mean() - 1.0) < 1e-12
        assert w.degree <= 4
