import json

import varboot


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_vt_harmonic(tmp_path):
    path = _write(tmp_path, "harmonic.vbt", "dim 1\nfield y scalar\neq E = y,0,0\n")
    code, text, js = varboot.run(["--format", "json", "vt", path, "--vary", "y"])
    assert code == 0
    out = json.loads(js)
    assert out["schema"] == 1
    assert out["outputs"]["density"]["text"] == "1/2*y,0,0*y"


def test_helmholtz_detects_nonvariational(tmp_path):
    path = _write(tmp_path, "nonvar.vbt", "dim 1\nfield y scalar\neq E = y*y,0\n")
    code, text, js = varboot.run(["--format", "json", "helmholtz", path])
    assert code == 0
    out = json.loads(js)
    assert out["outputs"]["variational"] is False


def test_exit_codes(tmp_path):
    assert varboot.run([])[0] == 1
    bad = _write(tmp_path, "bad.vbt", "dim 1\nfield y scalar\neq E = y +* y\n")
    assert varboot.run(["helmholtz", bad])[0] == 1
    deep = _write(tmp_path, "deep.vbt", "dim 1\nfield y scalar\neq E = y,0,0,0\n")
    assert varboot.run(["helmholtz", deep])[0] == 2


def test_model_expressions():
    m = varboot.Model("dim 2\nfield g metric\nfield phi scalar\n")
    assert m.equal("g[0,1]", "g[1,0]")
    assert m.eval("phi,0,1 - phi,1,0") == "0"
    # round trip through the printer
    printed = m.eval("inv(g)[mu,nu]*phi,mu*phi,nu")
    assert m.equal(printed, "inv(g)[mu,nu]*phi,mu*phi,nu")


def test_catalogue_counts():
    total, decomposable, rank = varboot.catalogue_counts(2)
    assert (total, decomposable, rank) == (4, 1, 4)
