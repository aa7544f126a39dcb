"""Acceptance run: one pass/fail line per criterion, with its tolerance and runtime limit.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.  Companion lines report the nontrivial cases that
accompany criteria whose headline case is degenerate.
"""

import time

import pytest

from modcomp import verify


def _line(capsys, label, cases, limit, seconds):
    ok = bool(cases) and all(c.passed for c in cases) and seconds <= limit
    worst = max(cases, key=lambda c: c.residual / c.tolerance if c.tolerance else c.residual)
    tols = sorted({c.tolerance for c in cases})
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}  {label}: {len(cases)} cases, worst residual "
              f"{worst.residual:.3g} (tolerance {', '.join(f'{t:g}' for t in tols)}), "
              f"{seconds:.1f} s (limit {limit:g} s)")
    return ok


def _timed(*suites):
    t0 = time.perf_counter()
    cases = []
    for s in suites:
        cases += verify.run_suite(s).cases
    return cases, time.perf_counter() - t0


def test_exact_duality(capsys):
    cases, t = _timed("duality")
    assert _line(capsys, "exact duality A = -B for 0 < D, d <= 40", cases, 120, t)


def test_class_number_anchors(capsys):
    cases, t = _timed("class-numbers")
    assert _line(capsys, "class-number anchors and exhaustion to n = 200", cases, 10, t)


def test_denominator_formula(capsys):
    cases, t = _timed("denominator")
    assert _line(capsys, "denominator formula at N = 40", cases, 5, t)


def test_harmonic_examples(capsys):
    cases, t = _timed("harmonic-examples")
    cases = [c for c in cases if c.identity.startswith("xi")]
    assert _line(capsys, "xi of the class-number generating function and of E2*", cases, 5, t)


def test_theta_transforms_and_equations(capsys):
    cases, t = _timed("theta-transforms", "theta-diffeqs")
    assert _line(capsys, "theta transformation laws and differential equations", cases, 120, t)


def test_astar_operator_identities(capsys):
    cases, t = _timed("astar-prop12")
    assert _line(capsys, "A* lowering in tau and z and the Laplacian relation", cases, 300, t)


def test_astar_two_expansions(capsys):
    cases, t = _timed("astar-two-expansions")
    assert _line(capsys, "A* z-expansion vs tau-expansion, scalar bridge", cases, 600, t)


def test_astar_modularity(capsys):
    cases, t = _timed("astar-modularity")
    assert _line(capsys, "A* modularity in z (weight 2) and tau (weight 3/2)", cases, 600, t)


def test_cm_smoothness(capsys):
    cases, t = _timed("cm-smoothness")
    head = [c for c in cases if c.point.get("d") == 4]
    comp = [c for c in cases if c.point.get("d") == 8]
    ok = _line(capsys, "F*_{4,1} limit at z = i stable under radius halving", head, 120, t)
    _line(capsys, "  companion: F*_{8,1} at z = i sqrt 2 (" + comp[0].note.split(",")[0] + ")", comp, 120, t)
    assert ok and all(c.passed for c in comp)


def test_millson_shintani(capsys):
    cases, t = _timed("millson-shintani")
    assert _line(capsys, "Millson/Shintani equality and lowering at d = 3", cases, 600, t)


def test_higher_weight(capsys):
    cases, t = _timed("higher-weight")
    head = [c for c in cases if (c.point["k"], c.point["D"]) == (1, -3)]
    comp = [c for c in cases if (c.point["k"], c.point["D"]) != (1, -3)]
    ok = _line(capsys, "B_1* at D = -3: modularity, lowering, singular kernel", head, 600, t)
    _line(capsys, "  companion: (k, D) = (1, 5) and (2, -3), where B* is nonzero", comp, 600, t)
    assert ok and all(c.passed for c in comp)


@pytest.mark.slow
def test_growth_sanity(capsys):
    cases, t = _timed("growth-sanity")
    assert _line(capsys, "|G_D(tau0)|/D bounded and flat for D <= 400", cases, 1800, t)
