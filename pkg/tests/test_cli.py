import json

import pytest

from neutralmatch.cli import main, parse_mechanism, reproduce, UsageError

CYCLIC = {"kind": "two_sided", "n": 3, "men": [[3, 2, 1], [1, 3, 2], [2, 1, 3]],
          "women": [[3, 2, 1], [1, 3, 2], [2, 1, 3]]}
SINGLES = {"kind": "one_sided", "n": 3, "agents": [[1, 2, 3], [2, 1, 3], [3, 2, 1]]}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, data in (("cyclic3", CYCLIC), ("singles3", SINGLES)):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(data))
        out[name] = str(path)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "one_sided", "n": 3, "agents": [[1, 2, 3], [2, 2, 3], [3, 1, 2]]}))
    out["bad"] = str(bad)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_run_royalty_on_cyclic_profile(capsys, files):
    code, out, _ = run(capsys, "run", "--mech", "all_D:first=1", "--profile", files["cyclic3"],
                       "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["involution"]["m1"] == "w3" and data["involution"]["w1"] == "m3"
    assert data["involution"]["m2"] == "w2"


def test_run_sd_leaves_everyone_single(capsys, files):
    code, out, _ = run(capsys, "run", "--mech", "sd:fixed=[1,2,3]", "--profile", files["singles3"])
    assert code == 0
    assert "1->1 2->2 3->3" in out


def test_malformed_profile_exits_two(capsys, files):
    code, _, err = run(capsys, "run", "--mech", "fixed:[1,2,3]", "--profile", files["bad"])
    assert code == 2
    assert "agents[1][1]" in err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", "--mech", "rmin", "--bogus"])
    assert e.value.code == 2


def test_unknown_axiom_exits_two(capsys):
    code, _, err = run(capsys, "verify", "--mech", "rmin", "--axioms", "eff,fun")
    assert code == 2 and "fun" in err


def test_verify_passing_and_failing(capsys):
    code, out, _ = run(capsys, "verify", "--mech", "fixed:[2,1,3]", "--axioms", "eff,gsp")
    assert code == 0 and "group_sp" in out
    code, out, _ = run(capsys, "verify", "--mech", "rmin", "--axioms", "gsp", "--coalition", "1",
                       "--format", "json")
    assert code == 1
    assert json.loads(out)[0]["verdict"] == "fails"


def test_verify_two_sided_needs_n(capsys):
    code, _, err = run(capsys, "verify", "--mech", "royal_cascade")
    assert code == 2 and "--n" in err


def test_verify_output_is_deterministic(capsys):
    argv = ["verify", "--mech", "royal_cascade", "--n", "3", "--axioms", "wgn,gn",
            "--format", "json"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    assert first[0] == 1
    reports = json.loads(first[1])
    assert [r["verdict"] for r in reports] == ["holds", "fails"]


def test_sampled_verify(capsys):
    code, out, _ = run(capsys, "verify", "--mech", "all_U:first=2,terminal=a3", "--n", "3",
                       "--mode", "sample:200:7", "--format", "json")
    assert code == 0
    assert all(r["mode"] == "sample:200:7" for r in json.loads(out))


def test_enumerate_four(capsys):
    code, out, _ = run(capsys, "enumerate-four", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["missing"] == 0 and data["extra"] == 0
    code, out, _ = run(capsys, "enumerate-four", "--sigma", "crossed", "--lattice")
    assert code == 0 and "¦" in out


def test_induce(capsys):
    code, out, _ = run(capsys, "induce", "--mech", "all_D:first=1", "--format", "json")
    assert code == 0
    assert json.loads(out)["picking_order"]["nodes"][""] == 1


def test_randomize(capsys, files):
    code, out, _ = run(capsys, "randomize", "--profile", files["cyclic3"], "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["rsd"][0] == ["1/12", "11/24", "11/24"]
    assert data["royalty"][0] == ["1/9", "4/9", "4/9"]


@pytest.mark.parametrize("target", ["rsd-table", "royalty-table", "fosd", "stability", "lemma4"])
def test_reproduce_targets_pass(target):
    results = reproduce(target)
    assert results and all(r["pass"] for r in results)


def test_reproduce_cli_exit_code(capsys):
    code, out, _ = run(capsys, "reproduce", "stability")
    assert code == 0
    assert out.count("PASS") == 3


def test_json_mechanism_spec(tmp_path, capsys, files):
    from neutralmatch.onesided import enumerate_picking_orders
    order = next(enumerate_picking_orders(3, first=2))
    path = tmp_path / "order.json"
    path.write_text(json.dumps(order.to_json()))
    code, out, _ = run(capsys, "run", "--mech", f"json:{path}", "--profile", files["singles3"])
    assert code == 0


@pytest.mark.parametrize("spec", ["sd:fixed=[1,1,2]", "all_D:first=9", "nope", "fixed:abc",
                                  "all_D:terminal=zz"])
def test_bad_mechanism_specs(spec):
    with pytest.raises(UsageError):
        parse_mechanism(spec, 3)


def test_mechanism_specs_build():
    assert parse_mechanism("sd2:order=[m1,w1,m2,w2]").instance.n == 2
    assert parse_mechanism("dictator:2").name == "dictator(2)"
    assert parse_mechanism("constant:m1-w2,m2-w1", 2).instance.two
    assert parse_mechanism("stable", 3).name == "stable_first"
