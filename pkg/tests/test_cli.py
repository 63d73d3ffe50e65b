import copy
import json

import numpy as np
import pytest

from finq import linalg as la
from finq.cli import default_manifest_path, load_manifest, main, manifest_from_dict, resolve_tol, run_suite
from finq.errors import InputError


@pytest.fixture(scope="module")
def corpus_json():
    return json.loads(default_manifest_path().read_text())


def _entry(data, name):
    e = copy.deepcopy(next(e for e in data["entries"] if e["name"] == name))
    e.pop("dual_iso", None)
    return e


def _write(tmp_path, data, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_minimal_manifest_loads(tmp_path, capsys):
    path = _write(tmp_path, {"entries": [{"kind": "algebra", "name": "C2", "blocks": [1, 1]}]})
    man = load_manifest(path)
    assert len(man) == 1
    assert man.settings == {"tolerance": 1e-9, "report": "text", "seed": 0}
    assert main(["validate", "-m", path]) == 0


def test_unresolved_reference_is_input_error(tmp_path, capsys):
    data = {"entries": [{"kind": "weight", "name": "w", "algebra": "missing", "values": [[1.0, 0.0]]}]}
    with pytest.raises(InputError, match="unresolved reference"):
        manifest_from_dict(data)
    assert main(["validate", "-m", _write(tmp_path, data)]) == 2
    assert "unresolved reference" in capsys.readouterr().err


def test_parse_error_reports_position(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"entries": [\n  {"kind": "algebra",, }\n]}')
    assert main(["validate", "-m", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


@pytest.mark.parametrize("data,msg", [
    ({"entries": [{"kind": "bogus", "name": "x"}]}, "unknown kind"),
    ({"entries": [{"kind": "algebra", "name": "a", "blocks": [1]}] * 2}, "duplicate name"),
    ({"entries": [], "settings": {"tolerance": -1}}, "tolerance"),
    ({"entries": [], "settings": {"report": "xml"}}, "report"),
    ({"nothing": []}, "entries"),
])
def test_invalid_manifests(data, msg):
    with pytest.raises(InputError, match=msg):
        manifest_from_dict(data)


def test_missing_manifest_file(tmp_path):
    assert main(["validate", "-m", str(tmp_path / "absent.json")]) == 2


def test_bad_arguments_exit_2():
    assert main(["suite", "nonsense"]) == 2
    assert main([]) == 2


def test_tolerance_precedence(monkeypatch, corpus):
    monkeypatch.delenv("FINQ_TOL", raising=False)
    assert resolve_tol(None, corpus) == 1e-9
    assert resolve_tol(None, None) == la.DEFAULT_TOL
    monkeypatch.setenv("FINQ_TOL", "1e-6")
    assert resolve_tol(None, corpus) == 1e-6
    assert resolve_tol(1e-3, corpus) == 1e-3
    monkeypatch.setenv("FINQ_TOL", "abc")
    with pytest.raises(InputError):
        resolve_tol(None, corpus)


def test_env_tolerance_reaches_report(monkeypatch, tmp_path, capsys, corpus_json):
    monkeypatch.setenv("FINQ_TOL", "1e-7")
    path = _write(tmp_path, {"entries": [_entry(corpus_json, "FZ2")]})
    assert main(["validate", "-m", path, "--report", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["meta"]["tolerance"] == 1e-7
    assert all(c["threshold"] == 1e-7 for c in out["checks"])


def test_corrupted_fixture_fails_with_anchor(tmp_path, capsys, corpus_json):
    e = _entry(corpus_json, "FZ2")
    e["delta"][1][0][0] += 1e-3
    path = _write(tmp_path, {"entries": [e]})
    assert main(["validate", "-m", path, "--report", "json"]) == 1
    out = json.loads(capsys.readouterr().out)
    assert not out["passed"] and out["n_failed"] > 0
    bad = [c for c in out["checks"] if c["verdict"] == "fail"]
    assert any(c["check_id"] == "FZ2.coassociativity" for c in bad)
    assert all(c["paper_anchor"] for c in bad)


def test_axioms_suite_size(corpus):
    rep = run_suite(corpus, "axioms", 1e-9, 0)
    assert len(rep) >= 40 and rep.passed
    ids = [r.check_id for r in rep.records]
    assert ids == sorted(ids)


def test_text_report(capsys):
    assert main(["validate", "--qg", "KP"]) == 0
    out = capsys.readouterr().out
    assert "PASS  KP.pentagon" in out and "checks passed" in out


def test_unknown_selection_is_input_error(capsys):
    assert main(["validate", "--qg", "nope"]) == 2


def test_emit_matrix(tmp_path, capsys):
    out = tmp_path / "w.json"
    assert main(["validate", "--qg", "FZ2", "--emit-matrix", str(out)]) == 0
    payload = json.loads(out.read_text())
    w = la.matrix_from_json(payload["matrix"])
    assert payload["name"] == "W(FZ2)"
    assert la.residual(w @ w.conj().T, np.eye(4)) <= 1e-12
    npy = tmp_path / "u.npy"
    assert main(["implement", "--action", "transl_Z2", "--emit-matrix", str(npy)]) == 0
    u = np.load(npy)
    assert u.shape == (4, 4)


def test_figures(tmp_path, capsys):
    d = tmp_path / "figs"
    assert main(["validate", "--qg", "CZ2", "--figures", str(d)]) == 0
    names = sorted(p.name for p in d.iterdir())
    assert names == ["validate_residuals.png", "validate_timing.png"]
    assert all(p.stat().st_size > 0 for p in d.iterdir())


@pytest.mark.parametrize("cmd", [["dual", "--qg", "CZ2"], ["action-validate", "--action", "ad_Z2"],
                                 ["crossed", "--action", "transl_Z2"], ["tower", "--action", "transl_Z2"],
                                 ["predicates", "--action", "transl_Z2"]])
def test_subcommands_pass_on_corpus(cmd, capsys):
    assert main(cmd + ["--report", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and out["meta"]["command"] == cmd[0]
