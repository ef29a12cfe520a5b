import json
import shutil
import subprocess

import numpy as np
import pytest

from iqseq import io
from iqseq.cli import main
from iqseq.decompose import two_step
from iqseq.generators import shrinking, shrinking_postproc, three_outcome
from iqseq.quantum import AdaptiveSequence, StochasticMatrix, choi_distance, luders
from iqseq.random_objects import random_instrument, random_state


def roundtrip(obj):
    return io.from_json(io.loads(io.dumps(io.to_json(obj))))


def test_instrument_roundtrip_is_exact(rng):
    t = random_instrument(rng, 2, 3, [2, 0, 1])
    back = roundtrip(t)
    assert back.outcomes == t.outcomes
    for a, b in zip(t.all_kraus(), back.all_kraus()):
        assert np.array_equal(a, b)


def test_povm_stochastic_state_roundtrip(rng):
    a = three_outcome()
    assert all(np.array_equal(x, y) for x, y in zip(roundtrip(a).effects, a.effects))
    nu = StochasticMatrix(("a", "b"), ("x",), [[1.0], [1.0]])
    assert np.array_equal(roundtrip(nu).matrix, nu.matrix)
    rho = random_state(rng, 3)
    assert np.array_equal(roundtrip(rho), rho)


def test_sequence_roundtrip():
    asi = two_step(shrinking(), shrinking_postproc()).as_sequence()
    back = roundtrip(asi)
    assert back.dims == asi.dims
    for t1, t2 in zip(asi.steps, back.steps):
        for prev in t1:
            for k in t1[prev].outcomes:
                assert choi_distance(t1[prev][k], t2[prev][k], t1[prev].shape) == 0.0


@pytest.mark.parametrize("data,pointer", [
    ({"kind": "instrument", "dim_in": 2, "dim_out": 2, "outcomes": ["a"],
      "operations": [[[[[1, 0], [0, 0]], [[0, 0], [1]]]]]}, "/operations/0/0/1/1"),
    ({"kind": "instrument", "dim_in": 2, "dim_out": 2, "outcomes": ["a", "a"],
      "operations": [[], []]}, "/outcomes"),
    ({"kind": "povm", "dim": 2, "outcomes": ["a"]}, "/effects"),
    ({"kind": "stochastic", "rows": ["a"], "cols": ["x"], "matrix": [["1"]]}, "/matrix/0/0"),
    ({"kind": "widget"}, "/kind"),
    ({"format_version": 9, "kind": "state", "matrix": [[[1, 0]]]}, "/format_version"),
])
def test_malformed_inputs_point_at_the_problem(data, pointer):
    with pytest.raises(io.MalformedError) as exc:
        io.from_json(data)
    assert exc.value.pointer == pointer


def test_invalid_json_text():
    with pytest.raises(io.MalformedError):
        io.loads("{not json")


def test_nan_is_rejected():
    with pytest.raises(io.MalformedError):
        io.matrix_from_json([[[float("nan"), 0]]])


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(io.dumps(io.to_json(obj) if not isinstance(obj, dict) else obj))
    return str(path)


def test_cli_validate(tmp_path, capsys):
    good = write(tmp_path, "a.json", three_outcome())
    assert main(["validate", good]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True
    bad = write(tmp_path, "b.json", {"kind": "povm", "dim": 1, "outcomes": ["a"],
                                     "effects": [[[[0.5, 0]]]]})
    assert main(["validate", bad]) == 3


def test_cli_decompose_then_verify_and_simulate(tmp_path, capsys):
    target = write(tmp_path, "t.json", shrinking())
    nu = write(tmp_path, "nu.json", shrinking_postproc())
    assert main(["decompose", target, "--mode", "two-step", "--postproc", nu]) == 0
    out = capsys.readouterr().out
    env = json.loads(out)
    assert env["kind"] == "decomposition" and env["verification"]["passed"]
    assert env["resources"]["d_A"] == 3 and env["resources"]["m"] == {"0": 2, "1": 1}
    dec = tmp_path / "dec.json"
    dec.write_text(out)
    assert main(["verify", str(dec), "--target", target]) == 0
    capsys.readouterr()
    assert main(["resources", str(dec)]) == 0
    assert json.loads(capsys.readouterr().out)["N"] == 2
    assert main(["simulate", str(dec), "--state", "mixed", "--shots", "300", "--seed", "9"]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", str(dec), "--state", "mixed", "--shots", "300", "--seed", "9"]) == 0
    assert capsys.readouterr().out == first
    assert sum(json.loads(first)["counts"].values()) == 300


@pytest.mark.parametrize("mode", ["two-step", "two-step-reduced", "product", "povm"])
def test_cli_modes_on_examples(tmp_path, capsys, mode):
    assert main(["examples", "qubit4-sic"]) == 0
    path = tmp_path / "sic.json"
    path.write_text(capsys.readouterr().out)
    assert main(["decompose", str(path), "--mode", mode]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["verification"]["passed"]


def test_cli_reduced_precondition(tmp_path, capsys):
    # merging the SIC pairs gives full-rank effects, so no intermediate space is saved
    assert main(["examples", "qubit4-sic"]) == 0
    path = tmp_path / "sic.json"
    path.write_text(capsys.readouterr().out)
    assert main(["examples", "qubit4-sic", "--postproc"]) == 0
    nu = tmp_path / "nu.json"
    nu.write_text(capsys.readouterr().out)
    assert main(["decompose", str(path), "--mode", "two-step-reduced", "--postproc", str(nu)]) == 3


def test_cli_min_ancilla_and_n_step(tmp_path, capsys, rng):
    grow = write(tmp_path, "g.json", random_instrument(rng, 2, 3, [1, 2]))
    assert main(["decompose", grow, "--mode", "min-ancilla"]) == 0
    capsys.readouterr()
    c1 = write(tmp_path, "c1.json", StochasticMatrix(("0", "1"), ("x",), [[1.0], [1.0]]))
    assert main(["decompose", grow, "--mode", "n-step", "--chain", c1]) == 0
    capsys.readouterr()
    same = write(tmp_path, "s.json", luders(three_outcome()))
    assert main(["decompose", same, "--mode", "min-ancilla"]) == 3


def test_cli_verify_failure(tmp_path, capsys, rng):
    a = write(tmp_path, "a.json", AdaptiveSequence.single(random_instrument(rng, 2, 2, [1, 1])))
    b = write(tmp_path, "b.json", random_instrument(rng, 2, 2, [1, 1]))
    assert main(["verify", a, "--target", b]) == 4


def test_cli_malformed_and_missing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2
    assert main(["no-such-command"]) == 2


def test_cli_tolerance_env(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, "a.json", three_outcome())
    monkeypatch.setenv("IQSEQ_TOL", "abc")
    assert main(["validate", path]) == 2


def test_cli_closed_form(capsys):
    assert main(["examples", "qubit4", "--alpha", "0.8", "--beta", "0.6", "--eta", "0.5",
                 "--closed-form"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data["closed_form"]["step2"]) == {"0,0", "0,1", "1,0", "1,1"}
    assert main(["examples", "shrinking", "--closed-form"]) == 3


@pytest.mark.skipif(shutil.which("iqseq") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["iqseq", "examples", "three-outcome", "--postproc"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["kind"] == "stochastic"
