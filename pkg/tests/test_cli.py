import json
import subprocess
import sys
from importlib import resources

import pytest

from pihier.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "client_server")
    assert code == 0 and "new s" in out


def test_parse_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.pi"
    bad.write_text("a<b")
    code, _, err = run(capsys, "parse", str(bad))
    assert code == 2 and err


def test_missing_file_exit_2(capsys):
    code, _, _ = run(capsys, "parse", "/no/such/file.pi")
    assert code == 2


def test_usage_error_exit_2(capsys):
    code, _, err = run(capsys, "check", "client_server")
    assert code == 2 and "--hierarchy" in err


def test_nf_json(capsys):
    code, out, _ = run(capsys, "nf", "client_server", "--key", "--json")
    data = json.loads(out)
    assert code == 0 and {"nf", "binders", "actives", "key"} <= set(data)


def test_forest_depth(capsys):
    code, out, _ = run(capsys, "forest", "depth_nested", "--depth", "--json")
    data = json.loads(out)
    assert data["nest"] == 3 and data["depth"] == 2


def test_forest_dot(capsys):
    code, out, _ = run(capsys, "forest", "fig_forest", "--dot")
    assert out.startswith("digraph")


def test_infer_ok_and_check(tmp_path, capsys):
    prefix = str(tmp_path / "cs")
    code, out, _ = run(capsys, "infer", "examples/client_server.pi", "--json", "--emit", prefix)
    data = json.loads(out)
    assert code == 0 and data["status"] == "ok"
    code, out, _ = run(capsys, "check", prefix + ".pi", "--hierarchy", prefix + ".hier",
                       "--env", prefix + ".env")
    assert code == 0 and "well typed" in out


def test_infer_ring_exit_1(capsys):
    code, out, _ = run(capsys, "infer", "examples/ring.pi")
    assert code == 1 and "base(" in out


def test_check_negative(tmp_path, capsys):
    h = tmp_path / "h.hier"
    h.write_text("a < b\n")
    t = tmp_path / "t.pi"
    t.write_text("new x:a[b]. new y:a. x<y>")
    code, _, _ = run(capsys, "check", str(t), "--hierarchy", str(h))
    assert code == 1


def test_tcompat(tmp_path, capsys):
    h = tmp_path / "h.hier"
    h.write_text("a < b\n")
    t = tmp_path / "t.pi"
    t.write_text("new x:a. new y:b. (x<y> | y<x>)")
    code, _, _ = run(capsys, "tcompat", str(t), "--hierarchy", str(h), "--oracle")
    assert code == 0
    t.write_text("new x:a. new y:a. x<y>")
    code, _, _ = run(capsys, "tcompat", str(t), "--hierarchy", str(h))
    assert code == 1


def test_explore_truncated_is_inconclusive(capsys):
    code, out, _ = run(capsys, "explore", "ring", "--max-states", "30")
    assert code == 3 and "truncated" in out


def test_explore_complete(tmp_path, capsys):
    t = tmp_path / "t.pi"
    t.write_text("a<b> | a(x).0")
    code, out, _ = run(capsys, "explore", str(t), "--json")
    assert code == 0 and json.loads(out)["exact"] is True


def test_bad_bounds(capsys):
    code, _, _ = run(capsys, "explore", "ring", "--max-states", "0")
    assert code == 2


def test_cover(capsys):
    code, out, _ = run(capsys, "cover", "client_server", "--query", "one_msg", "--json")
    assert code == 0 and json.loads(out)["verdict"] == "covered"
    code, out, _ = run(capsys, "cover", "client_server", "--query", "two_msgs",
                       "--max-states", "100")
    assert code == 3


def test_invariance_with_inference(capsys):
    code, out, _ = run(capsys, "invariance", "counter", "--infer", "--max-states", "80",
                       "--max-depth", "4")
    assert code in (0, 3), out


def test_encode(capsys):
    path = str(resources.files("pihier").joinpath("data", "reset_net.json"))
    code, out, _ = run(capsys, "encode", "reset-net", path, "--json")
    data = json.loads(out)
    assert code == 0 and "hierarchy" in data and "term" in data
    mpath = path.replace("reset_net.json", "minsky.json")
    code, out, _ = run(capsys, "encode", "minsky", mpath, "--label", "2", "--registers", "1")
    assert code == 0 and "l2" in out


def test_examples(capsys):
    code, out, _ = run(capsys, "examples", "list")
    assert code == 0 and "client_server" in out
    code, out, _ = run(capsys, "examples", "show", "ring")
    assert code == 0 and "new m" in out
    code, _, _ = run(capsys, "examples", "show", "nope")
    assert code == 2


def test_stdin(monkeypatch, capsys):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO("a<b>"))
    code, out, _ = run(capsys, "parse", "-")
    assert code == 0 and "a<b>" in out


def test_console_script():
    out = subprocess.run(["pi-hier", "examples", "list"], capture_output=True, text=True)
    assert out.returncode == 0
