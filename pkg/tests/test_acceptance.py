"""Acceptance gate: the 12 headline checks at their full documented sizes.

Each test prints exactly one ``ACCEPTANCE <n> PASS|FAIL <detail>`` line
(bypassing capture so the line is visible in any pytest run) and then
asserts.  The check logic lives in :mod:`tte.verify`; these tests only pin
the sizes, tolerances, and runtime budgets.
"""

import json
import time

from tte.verify import (
    VerifyConfig,
    _check_backward_instance,
    _check_closed_form_instance,
    _check_deviation,
    _check_dichotomy,
    _check_frobenius_identity,
    _check_mc_agreement,
    _check_moment_graph_agreement,
    _check_moment_instance,
    _check_multi_leg_max,
    _check_one_leg_cycles,
    _check_simplicity_agreement,
    _check_two_leg_max,
    report_json,
    run_suites,
)


def _report(capsys, idx, ok, detail):
    line = f"ACCEPTANCE {idx} {'PASS' if ok else 'FAIL'} {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def _timed(fn, cfg):
    start = time.perf_counter()
    check = fn(cfg)
    return check, time.perf_counter() - start


def test_acceptance_01_two_leg_unitary_max(capsys):
    cfg = VerifyConfig(max_m=3, n=2, random_tuples=100)
    check, elapsed = _timed(_check_two_leg_max, cfg)
    ok = check.ok and elapsed < 60.0
    _report(capsys, 1, ok, f"{check.detail} elapsed={elapsed:.1f}s<60s")


def test_acceptance_02_multi_leg_unitary_max(capsys):
    cfg = VerifyConfig(n=2, triples=20)
    check, elapsed = _timed(_check_multi_leg_max, cfg)
    ok = check.ok and elapsed < 120.0
    _report(capsys, 2, ok, f"{check.detail} elapsed={elapsed:.1f}s<120s")


def test_acceptance_03_one_leg_cycle_count(capsys):
    check = _check_one_leg_cycles(VerifyConfig(one_leg_m=4, n=2))
    _report(capsys, 3, check.ok, check.detail)


def test_acceptance_04_backward_bounds_instance(capsys):
    check = _check_backward_instance(VerifyConfig())
    _report(capsys, 4, check.ok, check.detail)


def test_acceptance_05_frobenius_simple_selections(capsys):
    check = _check_frobenius_identity(VerifyConfig(sel_max_m=3, sel_ns=(2, 3)))
    _report(capsys, 5, check.ok, check.detail)


def test_acceptance_06_simplicity_agreement(capsys):
    check = _check_simplicity_agreement(VerifyConfig(sel_max_m=3))
    _report(capsys, 6, check.ok, check.detail)


def test_acceptance_07_moments_and_operator_norm(capsys):
    cfg = VerifyConfig(n=2, moment_ps=(1, 2))
    first = _check_moment_instance(cfg)
    second = _check_moment_graph_agreement(cfg)
    ok = first.ok and second.ok
    _report(capsys, 7, ok, f"{first.detail}; {second.detail}")


def test_acceptance_08_repeated_leg_formula(capsys):
    check = _check_closed_form_instance(VerifyConfig())
    _report(capsys, 8, check.ok, check.detail)


def test_acceptance_09_wick_term_dichotomy(capsys):
    cfg = VerifyConfig(ginibre_max_m=3, ginibre_d1s=(1, 2))
    check, elapsed = _timed(_check_dichotomy, cfg)
    ok = check.ok and elapsed < 600.0
    _report(capsys, 9, ok, f"{check.detail} elapsed={elapsed:.1f}s<600s")


def test_acceptance_10_freeness_deviation(capsys):
    check = _check_deviation(VerifyConfig(deviation_m=3, n=2))
    _report(capsys, 10, check.ok, check.detail)


def test_acceptance_11_monte_carlo_agreement(capsys):
    cfg = VerifyConfig(mc_samples=100_000, mc_seeds=10)
    check, elapsed = _timed(_check_mc_agreement, cfg)
    ok = check.ok and elapsed < 300.0
    _report(capsys, 11, ok, f"{check.detail} elapsed={elapsed:.1f}s<300s")


def test_acceptance_12_thread_count_determinism(capsys):
    names = ["core", "moments", "ginibre"]
    base = dict(mc_samples=5000, mc_seeds=2)
    one = report_json(run_suites(names, VerifyConfig(threads=1, **base)))
    three = report_json(run_suites(names, VerifyConfig(threads=3, **base)))
    ok = one == three and json.loads(one)["ok"]
    _report(capsys, 12, ok, f"bytes={len(one)} identical={one == three}")
