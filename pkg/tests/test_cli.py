import json
import subprocess
import sys

import pytest

from doublereduction.cli import main
from doublereduction.expr import parse
from doublereduction.problem import bundled_path
from doublereduction.report import context_from_dict

WAVE_TEXT = bundled_path("wave2p1").read_text()


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _json_tail(out):
    return json.loads(out[out.index("\n{") + 1:])


def test_check_div(capsys):
    code, out, _ = run(capsys, "check-div", "wave2p1", "--samples", "50")
    assert code == 0
    assert "vanishes on solutions" in out and "over 50 samples" in out


def test_check_div_on_corrupted_vector(capsys, tmp_path):
    bad = tmp_path / "bad.problem"
    bad.write_text(WAVE_TEXT.replace("conserved -D(u,t)", "conserved -2*D(u,t)"))
    code, out, _ = run(capsys, "check-div", str(bad))
    assert code == 1
    assert "does NOT vanish" in out and "residual: -D(u,y,y)*g(u) - D(u,x,x)*f(u) - D(u,y)^2*g'(u) - D(u,x)^2*f'(u)" in out


def test_check_assoc_table(capsys):
    code, out, _ = run(capsys, "check-assoc", "wave2p1")
    assert code == 0
    rows = out.splitlines()[1:5]
    assert [r.split()[0] for r in rows] == ["X1", "X2", "X3", "X4"]
    assert "not associated" in rows[3] and "t: -D(u,t)" in rows[3]
    assert all("associated       (t: 0, x: 0, y: 0)" in r for r in rows[:3])


def test_check_assoc_single_generator(capsys):
    assert run(capsys, "check-assoc", "wave2p1", "--gen", "X4")[0] == 1
    assert run(capsys, "check-assoc", "wave2p1", "--combo", "X1 + c1*X2")[0] == 0


def test_reduce_exit_codes(capsys):
    code, out, _ = run(capsys, "reduce", "wave2p1", "--combo", "X1 + c1*X2 + c2*X3")
    assert code == 0 and "T^r = -D(w,r)*g(w) + c2^2*D(w,r) + c1*c2*D(w,s)" in out
    code, _, err = run(capsys, "reduce", "wave2p1", "--gen", "X4")
    assert code == 1 and "[T^t, X] = -D(u,t)" in err
    assert run(capsys, "reduce", "wave2p1", "--gen", "X9")[0] == 2
    assert run(capsys, "reduce", "wave2p1", "--combo", "X1 + * X2")[0] == 2


def test_pipeline_trace(capsys):
    code, out, _ = run(capsys, "pipeline", "wave2p1")
    assert code == 0
    assert "J = -1" in out and "J = -exp(2*m)" in out
    assert "factored: D(v,n)*(f(v) + n^2*g(v) - c2^2*n^2 - c1^2 + 2*c1*c2*n) = C" in out
    assert "n = (x - c1*t)/(y - c2*t)" in out and "order: 2 -> 1" in out


def test_pipeline_strategy_override(capsys):
    code, out, _ = run(capsys, "pipeline", "wave2p1", "--strategy", "first")
    assert code == 0 and "stage 2: reduce by X2 = d/ds" in out


def test_emit_canonical_round_trip(capsys):
    code, out, _ = run(capsys, "pipeline", "wave2p1", "--emit", "canonical")
    assert code == 0
    doc = _json_tail(out)
    contexts = {k: context_from_dict(v) for k, v in doc["contexts"].items()}
    labels = [item["label"] for item in doc["expressions"]]
    assert {"stage1.T^r", "stage2.T^n", "stage2.J", "first_integral", "definition.n"} <= set(labels)
    for item in doc["expressions"]:
        e = parse(item["expr"], contexts[item["context"]])
        assert item["expr"] == str(e)


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "wave2p1", "--samples", "5")
    assert code == 0 and out.rstrip().endswith("all checks passed")
    assert out.count(": pass") == 12


def test_problem_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.problem"
    bad.write_text(WAVE_TEXT.replace("f(u)*D(u,x)", "f(u)*D(u,z)"))
    code, _, err = run(capsys, "check-div", str(bad))
    assert code == 2 and "bad.problem:" in err
    assert run(capsys, "check-div", str(tmp_path / "missing.problem"))[0] == 2
    assert run(capsys, "check-div", "wave2p1", "--samples", "0")[0] == 2


def test_pipeline_without_associated_generator(capsys, tmp_path):
    only_x4 = "\n".join(
        line for line in WAVE_TEXT.splitlines() if not line.startswith(("sym X1", "sym X2", "sym X3", "strategy"))
    )
    path = tmp_path / "x4.problem"
    path.write_text(only_x4)
    code, out, _ = run(capsys, "pipeline", str(path))
    assert code == 1 and "incomplete trace after 0 step(s)" in out


def test_module_entry_point():
    done = subprocess.run(
        [sys.executable, "-m", "doublereduction", "check-div", "wave2p1"], capture_output=True, text=True
    )
    assert done.returncode == 0 and "numeric check: pass" in done.stdout


@pytest.mark.parametrize("argv", [[], ["frobnicate", "wave2p1"]])
def test_argparse_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
