import io
import subprocess
import sys

import pytest

from unilab.cli import main


def call(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_run_pass():
    code, out = call("run", "srb_correct_sender")
    assert code == 0
    assert "overall: pass" in out


def test_run_violation_prints_witness():
    code, out = call("run", "separation_scenario3")
    assert code == 1
    assert "unidirectional: violated" in out
    assert "-- witness for unidirectional" in out


def test_protocol_override():
    code, out = call("run", "separation_scenario3", "--protocol", "uni-swmr")
    assert code == 0


def test_trace_then_check(tmp_path):
    path = tmp_path / "t.txt"
    code, _ = call("run", "srb_equivocating_sender", "--seed", "3", "--trace", str(path))
    assert code == 0
    assert path.read_text().startswith("# unilab-trace 1")
    code, out = call("check", str(path), "--property", "srb-agreement",
                     "--property", "srb-sequencing")
    assert code == 0
    assert "srb-agreement: pass" in out


def test_check_violation(tmp_path):
    path = tmp_path / "t.txt"
    call("run", "separation_scenario3", "--trace", str(path))
    code, _ = call("check", str(path), "--property", "unidirectional")
    assert code == 1


def test_horizon_is_inconclusive(tmp_path):
    scn = tmp_path / "short.scn"
    scn.write_text("protocol = srb\nn = 3\nt = 1\nhorizon = 4\n")
    code, out = call("run", str(scn))
    assert code == 2
    assert "horizon-exceeded=1" in out


def test_enumerate():
    code, out = call("enumerate", "srb_crash_sender", "--bound", "10000")
    assert code == 0
    assert out.startswith("variants=1 states=72 ")


def test_enumerate_bound():
    code, _ = call("enumerate", "srb_equivocating_sender", "--bound", "10")
    assert code == 2


def test_list():
    code, out = call("list-scenarios")
    assert code == 0
    assert "separation_scenario3" in out


@pytest.mark.parametrize("argv", [
    ["run", "no_such_scenario"],
    ["run", "missing/dir/x.scn"],
    ["check", "/nonexistent/trace.txt", "--property", "srb-agreement"],
    ["bogus"],
    ["enumerate", "srb_crash_sender"],
])
def test_bad_input_exit_code(argv):
    with pytest.raises(SystemExit) as info:
        code, _ = call(*argv)
        raise SystemExit(code)
    assert info.value.code == 3


def test_check_unknown_property(tmp_path):
    path = tmp_path / "t.txt"
    call("run", "srb_crash_sender", "--trace", str(path))
    code, _ = call("check", str(path), "--property", "nonsense")
    assert code == 3


def test_bad_scenario_reports_position(tmp_path, capsys):
    scn = tmp_path / "bad.scn"
    scn.write_text("protocol = srb\nn = 3\nt = x\n")
    code, _ = call("run", str(scn))
    assert code == 3
    assert "line 3, column 5" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "unilab", "run", "vwba_basic"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "overall: pass" in proc.stdout
