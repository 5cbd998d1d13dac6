import json
import math

import numpy as np
import pytest

from dynmem.cli import run_cli
from dynmem.generators import GeneratorPreset
from dynmem.grid import Grid
from dynmem.report import VerificationReport, observed_order
from dynmem.verify import SUITES, order_check, preset_from_name, run_verify


def test_observed_order():
    errs = [1.0, 0.25, 0.0625]
    assert observed_order(errs) == pytest.approx([2.0, 2.0])


def test_order_check_roundoff_floor():
    rep = VerificationReport()
    order_check(rep, "s", "exact", [1e-16, 2e-16, 1e-16], 0.8)
    order_check(rep, "s", "stalled", [1e-3, 1e-3, 1e-3], 0.8)
    assert [c.passed for c in rep.checks] == [True, False]


def test_report_json_and_summary():
    rep = VerificationReport()
    rep.add("a", "x", 1.0, 2.0)
    rep.add("a", "y", math.nan, 1.0)
    payload = json.loads(rep.to_json())
    assert payload["overall"] is False
    assert payload["checks"][1]["measured"] == "nan"
    assert "FAIL [a] y" in rep.summary()


def test_preset_from_name():
    assert preset_from_name("tempered") == GeneratorPreset("tempered")
    assert preset_from_name("p^0.5 + p").text == "p^0.5 + p"


@pytest.mark.parametrize("suite", ["constants", "linearity", "uniqueness-condition"])
def test_cheap_suites_pass_everywhere(suite):
    presets = [GeneratorPreset(k) for k in ("classical", "tempered", "affine", "hybrid")]
    rep = run_verify(presets, [suite], Grid(1.0, 64))
    assert rep.overall, rep.summary()


def test_crashing_suite_is_a_failure():
    rep = run_verify([GeneratorPreset("custom", text="p - 2")], ["admissibility"],
                     Grid(1.0, 64))
    assert not rep.overall


def test_threads_give_same_report():
    presets = [GeneratorPreset("classical"), GeneratorPreset("tempered")]
    a = run_verify(presets, ["constants", "laplace-reduction"], Grid(1.0, 64), threads=0)
    b = run_verify(presets, ["constants", "laplace-reduction"], Grid(1.0, 64), threads=3)
    assert a.to_json() == b.to_json()


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_verify([GeneratorPreset("classical")], ["nope"])


def test_all_suites_registered():
    assert len(SUITES) == 15


@pytest.mark.slow
def test_classical_passes_every_suite():
    rep = run_verify([GeneratorPreset("classical")], SUITES)
    assert rep.overall, rep.summary()


def _run(tmp_path, *argv):
    out = tmp_path / "out.txt"
    code = run_cli(["-o", str(out), *argv])
    return code, out.read_text() if out.exists() else ""


def test_cli_kernel(tmp_path):
    code, text = _run(tmp_path, "kernel", "--alpha", "0.5", "--t-end", "1", "--steps", "4")
    assert code == 0
    last = text.strip().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(0.5641896, abs=1e-7)


def test_cli_kernel_compare(tmp_path):
    code, text = _run(tmp_path, "kernel", "--alpha", "0.5", "--compare", "--steps", "8")
    assert code == 0 and "caputo-fabrizio" in text.splitlines()[0]


def test_cli_invert(tmp_path):
    code, text = _run(tmp_path, "invert", "--symbol", "(p^2 + 1)^-1", "--t-end", "1",
                      "--steps", "2")
    assert code == 0
    assert float(text.strip().splitlines()[-1].split(",")[1]) == pytest.approx(math.sin(1))


def test_cli_integral_and_derivative(tmp_path):
    src = tmp_path / "x.csv"
    t = np.linspace(0, 1, 65)
    src.write_text("t,value\n" + "".join(f"{a!r},{3 + 2 * a!r}\n" for a in t.tolist()))
    code, text = _run(tmp_path, "derivative", "--input", str(src), "--alpha", "0.5")
    assert code == 0
    assert float(text.strip().splitlines()[-1].split(",")[1]) == pytest.approx(2.2567583,
                                                                              abs=1e-7)
    code, _ = _run(tmp_path, "integral", "--input", str(src), "--alpha", "0.5")
    assert code == 0


def test_cli_ml_and_relax(tmp_path):
    code, text = _run(tmp_path, "ml", "--alpha", "0.5", "--lambda", "-1", "--steps", "4")
    assert code == 0
    assert float(text.strip().splitlines()[-1].split(",")[1]) == pytest.approx(0.4275836,
                                                                              abs=1e-7)
    code, text = _run(tmp_path, "relax", "--alpha", "0.5", "--kappa", "1", "--x0", "2",
                      "--steps", "4")
    assert float(text.strip().splitlines()[-1].split(",")[1]) == pytest.approx(0.8551672,
                                                                              abs=1e-7)


def test_cli_langevin_exit_codes(tmp_path):
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "beta": 0.5, "x0": [1], "A": [-1],
                               "n_steps": 32}))
    assert _run(tmp_path, "langevin", "--config", str(cfg))[0] == 0
    cfg.write_text(json.dumps({"alpha": 0.5, "beta": 0.5, "x0": [2], "t_end": 5,
                               "F": {"cubic": 10}, "n_steps": 64}))
    assert _run(tmp_path, "langevin", "--config", str(cfg))[0] == 2
    assert _run(tmp_path, "langevin", "--config", str(tmp_path / "missing.json"))[0] == 3


def test_cli_verify(tmp_path):
    report = tmp_path / "r.json"
    code, text = _run(tmp_path, "verify", "--preset", "classical", "--suite", "constants",
                      "--json", str(report))
    assert code == 0 and "overall: PASS" in text
    assert json.loads(report.read_text())["overall"] is True


def test_cli_verify_failure_exit(tmp_path):
    code, _ = _run(tmp_path, "verify", "--preset", "tempered", "--suite", "inverse-relations",
                   "--steps", "64")
    assert code == 1


def test_cli_bad_arguments(tmp_path):
    assert run_cli(["kernel"]) == 3
    assert run_cli(["nonsense"]) == 3
    assert _run(tmp_path, "kernel", "--alpha", "-1")[0] == 3


def test_cli_presets(tmp_path):
    code, text = _run(tmp_path, "presets")
    assert code == 0 and "tempered" in text
