import json
import math

import pytest

from modcomp import verify
from modcomp.config import TOLERANCES, Config


@pytest.mark.parametrize("suite", ["duality", "class-numbers", "denominator", "harmonic-examples",
                                   "theta-transforms", "theta-diffeqs", "cm-smoothness"])
def test_quick_suites_pass(suite):
    rep = verify.run_suite(suite, quick=True)
    assert rep.cases and rep.passed, rep.to_json(indent=1)


def test_suite_names():
    assert set(verify.SUITES) == set(TOLERANCES)
    with pytest.raises(ValueError):
        verify.run_suite("nope")


def test_tight_tolerance_is_reported_as_failure():
    rep = verify.run_suite("denominator", Config(tolerances={"denominator": 1e-30}))
    assert not rep.passed
    case = rep.cases[0]
    assert case.residual > case.tolerance == 1e-30
    assert "0/1 cases pass" in rep.summary()


def test_exceptions_are_recorded(monkeypatch):
    def boom(*args):
        raise RuntimeError("synthetic")
    monkeypatch.setattr(verify, "chk_xi_E2", boom)
    rep = verify.run_suite("harmonic-examples")
    bad = [c for c in rep.cases if not c.passed]
    assert len(bad) == 1 and "synthetic" in bad[0].note and math.isnan(bad[0].residual)


def test_report_json_round_trip():
    rep = verify.run_suite("class-numbers", quick=True)
    d = json.loads(rep.to_json())
    assert d["suite"] == "class-numbers" and d["pass"] is True
    assert {"identity", "point", "residual", "tolerance", "budget", "passed", "seconds", "note"} <= set(d["cases"][0])


def test_worker_pool_matches_serial():
    a = verify.run_suite("theta-diffeqs", quick=True)
    b = verify.run_suite("theta-diffeqs", quick=True, workers=2)
    assert [c.residual for c in a.cases] == pytest.approx([c.residual for c in b.cases], rel=1e-12)


def test_brute_force_classes():
    # h(-3) = h(-4) = 1, h(-23) = 3 for primitive reduced forms; the brute force counts all reduced forms
    assert len(verify.brute_force_classes(3)) == 1
    assert len(verify.brute_force_classes(23)) == 3
    assert len(verify.brute_force_classes(12)) == 2


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        Config(N=0)
    with pytest.raises(ValueError):
        Config(format="xml")
    with pytest.raises(ValueError):
        Config(tolerances={"bogus": 1.0})
    with pytest.raises(ValueError):
        Config.from_dict({"bogus": 1})
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"tol": 1e-9, "tolerances": {"duality": 0.0}}))
    cfg = Config.load(p)
    assert cfg.budget().tol == 1e-9 and cfg.tolerance("denominator") == TOLERANCES["denominator"]
    assert Config.from_dict(cfg.to_dict()) == cfg
