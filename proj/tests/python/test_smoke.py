# Copyright 2026 The thingsyntax Authors.
# SPDX-License-Identifier: Apache-2.0

import json
import math

import pytest

import thingsyntax as ts


def test_aspect_ratio():
    assert ts.aspect_ratio(10, 10) == 0.5
    assert ts.aspect_ratio(10, 20) == 0.25
    assert ts.aspect_ratio(20, 10) == 0.75
    with pytest.raises(ts.Error):
        ts.aspect_ratio(0, 1)


def test_normalize_box():
    w = ts.normalize_box(144, 108, 32, 24, 320, 240, color=4)
    assert w.x == pytest.approx(0.5)
    assert w.size == pytest.approx(0.01)
    assert w.color == 4
    assert ts.color_names()[ts.nearest_color(0, 255, 0)] == "green"


def test_statements_round_trip():
    s = ts.parse_statement("Green large wide at bottom middle.")
    assert (s.vertical, s.horizontal, s.size, s.ratio) == (2, 1, 2, 2)
    assert ts.parse_statement(ts.render_statement(s)) == s
    with pytest.raises(ts.ParseError):
        ts.parse_statement("Blue enormous wide thing at top right")
    assert ts.histogram_dimension(3) == 891
    assert ts.histogram_dimension(3, "ratio") == 3
    h = ts.histogram_from_statements(["Green small squared thing at top middle"] * 3)
    assert len(h) == 891 and sum(h) == 3 and max(h) == 3


def test_gmm_and_fisher_vector():
    images = ts.windows_from_jsonl(ts.generate_synthetic(["corridor", "shelfscape"], 10, 1))
    windows = [w for image in images for w in image]
    model = ts.fit_gmm(windows, 4, seed=3)
    assert model.components == 4
    assert sum(model.weights) == pytest.approx(1.0)
    assert ts.GmmModel.from_json(model.to_json()).to_json() == model.to_json()
    fv = ts.encode_fv(windows[:20], model)
    assert len(fv) == 40
    assert math.fsum(v * v for v in fv) == pytest.approx(1.0)
    bounds = ts.fit_boundaries(windows, 3)
    assert len(bounds.cuts("ratio")) == 2
    ts.quantize_window(windows[0], bounds)


def test_kl_and_ap():
    assert ts.kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.14384, abs=1e-4)
    assert ts.average_precision(["a", "b", "c", "d"], {"b"}) == 0.5


def test_cli_and_service(tmp_path):
    wd = str(tmp_path)
    code, out, err = ts.run_cli(["--workdir", wd, "--seed", "7", "synth", "--per-class", "30"])
    assert code == 0, err
    assert ts.run_cli(["--workdir", wd, "fit-bins"])[0] == 0
    assert ts.run_cli(["--workdir", wd, "query"])[0] == 0
    code, out, _ = ts.run_cli(["--workdir", wd, "eval"])
    assert code == 0 and "MAP" in out
    assert ts.run_cli(["--workdir", wd, "index"])[0] == 0
    service = ts.QueryService(tmp_path / "index")
    r = service.query(json.dumps({"statements": ["Grey large tall thing at center middle"]}))
    assert r.status == 200
    body = json.loads(r.body)
    assert body["corpus_size"] == 60
    assert body["results"][0]["image_id"].startswith("corridor")
    code, _, err = ts.run_cli(["--workdir", wd, "query", "--by", "nope"])
    assert code != 0 and json.loads(err)["error"]["code"] == "configuration"
