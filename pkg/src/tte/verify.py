"""Self-verification suites: the package checks its own theorems.

Each suite runs a set of equation-exact checks at configurable sizes and
returns structured results; the command line serializes them to JSON.  The
acceptance tests run the same checks at their full documented sizes, so the
logic lives here once.

Checks never compare against values produced by the code path under test:
extremal search results are confronted with dense evaluations, closed-form
counts, and independent enumeration, not with themselves.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .config import Caps, DEFAULT_CAPS, MC_NSIGMA, REL_TOL, SAMPLE_MARGIN
from . import ginibre as gin
from .extremal import (
    backward_upper_bound,
    m_exhaustive,
    moment_exponent,
    multi_backward_formula,
)
from .graph import (
    TensorGraph,
    build,
    build_moment,
    brute_force_has_cycle,
    is_simple,
    select,
)
from .perm import (
    PartialPermutation,
    Permutation,
    full_cycle,
    interval_merge_count,
    min_conjugate_backward,
    parse,
)
from .tensor import (
    evaluate,
    evaluate_partial_graph,
    make_u_pi,
    moment_trace,
    operator_norm,
    random_unitary,
)

__all__ = ["Check", "VerifyConfig", "SUITES", "run_suites", "report_json"]


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class VerifyConfig:
    """Suite sizes.  Defaults keep the command line interactive.

    The acceptance tests pass the full documented sizes explicitly.  The
    thread count influences execution only, never results, and is therefore
    not part of the serialized report.
    """

    max_m: int = 3
    n: int = 2
    seed: int = 0
    random_tuples: int = 20
    triples: int = 6
    one_leg_m: int = 4
    sel_max_m: int = 2
    sel_ns: tuple[int, ...] = (2,)
    moment_ps: tuple[int, ...] = (1, 2)
    ginibre_max_m: int = 2
    ginibre_d1s: tuple[int, ...] = (1, 2)
    deviation_m: int = 2
    mc_samples: int = 2000
    mc_seeds: int = 2
    threads: int = 1
    caps: Caps = DEFAULT_CAPS
    inject_failure: bool = False


def _perms(m: int) -> list[Permutation]:
    return [Permutation(m, images) for images in itertools.permutations(range(1, m + 1))]


def _u_tuples(
    k: int, m: int, n: int, caps: Caps
) -> Iterator[list[np.ndarray]]:
    """All ``(k!)^m`` tuples of leg-permutation operators, lex order."""
    pis = list(itertools.permutations(range(k)))
    us = {pi: make_u_pi(pi, n, caps) for pi in pis}
    for combo in itertools.product(pis, repeat=m):
        yield [us[pi] for pi in combo]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# core suite


def _check_two_leg_max(cfg: VerifyConfig) -> Check:
    """Exhaustive M vs dense maxima over all S_m x S_m pairs (two legs)."""
    m, n = cfg.max_m, cfg.n
    worst_eq = 0.0
    worst_excess = -1.0
    pairs = 0
    ok = True
    for s1 in _perms(m):
        for s2 in _perms(m):
            g = build([s1, s2], m)
            target = float(n ** m_exhaustive(g, caps=cfg.caps).M)
            best = 0.0
            for mats in _u_tuples(2, m, n, cfg.caps):
                val = evaluate([s1, s2], mats, n, cfg.caps).scalar
                if abs(val.imag) > 1e-9:
                    ok = False
                best = max(best, abs(val))
            worst_eq = max(worst_eq, abs(best - target) / target)
            for t in range(cfg.random_tuples):
                mats = [
                    random_unitary(n**2, [cfg.seed, 1, pairs, t, r]) for r in range(m)
                ]
                val = abs(evaluate([s1, s2], mats, n, cfg.caps).scalar)
                worst_excess = max(worst_excess, val - target)
            pairs += 1
    ok = ok and worst_eq <= REL_TOL and worst_excess <= SAMPLE_MARGIN
    return Check(
        "two_leg_unitary_max",
        ok,
        f"pairs={pairs} rel_gap={_fmt(worst_eq)} sample_excess={_fmt(worst_excess)}",
    )


def _check_multi_leg_max(cfg: VerifyConfig) -> Check:
    """Seeded three-leg words: dense max over operator tuples hits n^M."""
    n = cfg.n
    rng = np.random.default_rng([cfg.seed, 2])
    worst = 0.0
    count = 0
    ok = True
    for t in range(cfg.triples):
        m = 2 if t % 2 == 0 else 3
        sigmas = [
            Permutation(m, tuple(int(v) + 1 for v in rng.permutation(m)))
            for _ in range(3)
        ]
        g = build(sigmas, m)
        target = float(n ** m_exhaustive(g, caps=cfg.caps).M)
        best = 0.0
        for mats in _u_tuples(3, m, n, cfg.caps):
            val = evaluate(sigmas, mats, n, cfg.caps).scalar
            if abs(val.imag) > 1e-9:
                ok = False
            best = max(best, abs(val))
        worst = max(worst, abs(best - target) / target)
        count += 1
    ok = ok and worst <= REL_TOL
    return Check("multi_leg_unitary_max", ok, f"triples={count} rel_gap={_fmt(worst)}")


def _check_one_leg_cycles(cfg: VerifyConfig) -> Check:
    """One leg: M is the cycle count and identities evaluate to n^M."""
    m, n = cfg.one_leg_m, cfg.n
    eye = np.eye(n, dtype=np.complex128)
    worst = 0.0
    ok = True
    for s in _perms(m):
        res = m_exhaustive(build([s], m), caps=cfg.caps)
        if res.M != s.n_cycles():
            ok = False
        val = evaluate([s], [eye] * m, n, cfg.caps).scalar
        target = float(n**res.M)
        worst = max(worst, abs(val - target) / target)
    ok = ok and worst <= REL_TOL
    return Check("one_leg_cycles", ok, f"perms={len(_perms(m))} rel_gap={_fmt(worst)}")


def _check_backward_instance(cfg: VerifyConfig) -> Check:
    """The 6-point showcase: raw bound 5, relabeled bound 4, M = 4."""
    s1 = parse("(1 6 4 2 5 3)", 6)
    s2 = full_cycle(6)
    raw = backward_upper_bound([s1, s2])
    theta, total = min_conjugate_backward([s1, s2])
    res = m_exhaustive(build([s1, s2], 6), caps=cfg.caps)
    ok = (
        raw == 5
        and total == 4
        and res.M == 4
        and res.M <= total
        and s1.backward_count() == 4
        and s2.backward_count() == 1
    )
    return Check(
        "backward_bounds_instance",
        ok,
        f"raw={raw} relabeled={total} M={res.M} theta={theta.images}",
    )


def _check_closed_form_instance(cfg: VerifyConfig) -> Check:
    """Repeated-leg formula: M(sigma, gamma, gamma) = R + k - 1 with K = 1."""
    sigma = Permutation(3, (3, 1, 2))
    gamma = parse("(1 2 3)", 3)
    res = m_exhaustive(build([sigma, gamma, gamma], 3), caps=cfg.caps)
    value, applicable = multi_backward_formula(sigma, 3)
    kc = interval_merge_count(sigma)
    ok = res.M == 4 and value == 4 and applicable and kc == 1
    return Check(
        "repeated_leg_formula_instance",
        ok,
        f"M={res.M} formula={value} applicable={applicable} K={kc}",
    )


def _each_selection(g: TensorGraph) -> Iterator:
    """All selections: every rectangle subset with every internal edge subset."""
    for r_bits in range(1 << g.n_rects):
        rects = [r for r in range(g.n_rects) if r_bits >> r & 1]
        rset = set(rects)
        inner = [
            i for i, e in enumerate(g.edges) if e.src in rset and e.dst in rset
        ]
        for e_bits in range(1 << len(inner)):
            edges = [inner[i] for i in range(len(inner)) if e_bits >> i & 1]
            yield select(g, rects, edges)


def _check_simplicity_agreement(cfg: VerifyConfig) -> Check:
    """Peeling decision vs brute-force pairing search on every selection."""
    disagreements = 0
    checked = 0
    for m in range(1, cfg.sel_max_m + 1):
        for s1 in _perms(m):
            for s2 in _perms(m):
                g = build([s1, s2], m)
                for sel in _each_selection(g):
                    fast = is_simple(g, sel)
                    slow = not brute_force_has_cycle(g, sel, cfg.caps)
                    if fast != slow:
                        disagreements += 1
                    checked += 1
    return Check(
        "simplicity_agreement",
        disagreements == 0,
        f"selections={checked} disagreements={disagreements}",
    )


def core_suite(cfg: VerifyConfig) -> list[Check]:
    return [
        _check_two_leg_max(cfg),
        _check_multi_leg_max(cfg),
        _check_one_leg_cycles(cfg),
        _check_backward_instance(cfg),
        _check_closed_form_instance(cfg),
        _check_simplicity_agreement(cfg),
    ]


# ---------------------------------------------------------------------------
# moments suite


def _check_frobenius_identity(cfg: VerifyConfig) -> Check:
    """On cycle-free selections with unitaries: ||H||_F^2 = n^(k r - e)."""
    worst = 0.0
    checked = 0
    for m in range(1, cfg.sel_max_m + 1):
        for n in cfg.sel_ns:
            for i1, s1 in enumerate(_perms(m)):
                for i2, s2 in enumerate(_perms(m)):
                    g = build([s1, s2], m)
                    mats = [
                        random_unitary(n**2, [cfg.seed, 5, m, n, i1, i2, r])
                        for r in range(m)
                    ]
                    for sel in _each_selection(g):
                        if not is_simple(g, sel):
                            continue
                        _, frob = evaluate_partial_graph(g, sel, mats, n, cfg.caps)
                        target = float(n ** (2 * len(sel.rects) - len(sel.edges)))
                        worst = max(worst, abs(frob - target) / target)
                        checked += 1
    return Check(
        "frobenius_simple_selections",
        worst <= REL_TOL,
        f"selections={checked} rel_gap={_fmt(worst)}",
    )


def _showcase_word() -> tuple[list[PartialPermutation], int]:
    s1 = parse("1>2, 2>3", 3)
    s2 = parse("(1 2 3)", 3)
    return [s1, s2, s2], 3


def _check_moment_instance(cfg: VerifyConfig) -> Check:
    """Three-leg showcase word: moment traces and operator norm hit n^M."""
    sigmas, m = _showcase_word()
    n = cfg.n
    res = m_exhaustive(build(sigmas, m), caps=cfg.caps)
    n_open = sum(m - len(s.domain) for s in sigmas)
    mats = [make_u_pi(res.witness[r], n, cfg.caps) for r in range(m)]
    y = evaluate(sigmas, mats, n, cfg.caps).value
    worst = 0.0
    for p in (1, 2, 3):
        target = float(n ** (2 * p * res.M + n_open))
        worst = max(worst, abs(moment_trace(y, p) - target) / target)
    norm = operator_norm(y, cfg.caps).value
    worst = max(worst, abs(norm - float(n**res.M)) / float(n**res.M))
    return Check(
        "moment_trace_instance",
        worst <= REL_TOL,
        f"M={res.M} open={n_open} rel_gap={_fmt(worst)}",
    )


def _check_moment_graph_agreement(cfg: VerifyConfig) -> Check:
    """moment_exponent formula vs exhaustive search on the moment ring."""
    sigmas, m = _showcase_word()
    gaps = []
    for p in cfg.moment_ps:
        formula = moment_exponent(sigmas, p, caps=cfg.caps)
        direct = m_exhaustive(build_moment(sigmas, m, p), caps=cfg.caps)
        gaps.append((p, formula, direct.M, direct.nodes))
    ok = all(f == d for _, f, d, _ in gaps)
    detail = " ".join(f"p{p}:{f}/{d}(nodes={nd})" for p, f, d, nd in gaps)
    return Check("moment_graph_agreement", ok, detail)


def moments_suite(cfg: VerifyConfig) -> list[Check]:
    return [
        _check_frobenius_identity(cfg),
        _check_moment_instance(cfg),
        _check_moment_graph_agreement(cfg),
    ]


# ---------------------------------------------------------------------------
# ginibre suite


def _check_dichotomy(cfg: VerifyConfig) -> Check:
    """Per-pairing exponents: non-crossing attain, crossing stay below."""
    bad = 0
    nc_counts_ok = True
    r_ok = True
    checked = 0
    for m in range(1, cfg.ginibre_max_m + 1):
        n_nc = 0
        for theta in gin.enumerate_theta(m, cfg.caps):
            sig = gin.theta_to_sigma(theta)
            if sig.backward_count() != 1 + m:
                r_ok = False
            if gin.is_noncrossing(theta):
                n_nc += 1
            for d1 in cfg.ginibre_d1s:
                term = gin.pairing_term_exponent(theta, d1, 1, caps=cfg.caps)
                if not term.ok:
                    bad += 1
                checked += 1
        if n_nc != gin.catalan(m):
            nc_counts_ok = False
    ok = bad == 0 and nc_counts_ok and r_ok
    return Check(
        "wick_term_dichotomy",
        ok,
        f"terms={checked} violations={bad} catalan_ok={nc_counts_ok} backward_ok={r_ok}",
    )


def _deviation_model(cfg: VerifyConfig, m: int, d1: int, d2: int) -> gin.GinibreModel:
    n = cfg.n
    dim = n ** (d1 + d2)
    a = tuple(random_unitary(dim, [cfg.seed, 7, m, d1, d2, i]) for i in range(m))
    b = tuple(random_unitary(dim, [cfg.seed, 8, m, d1, d2, i]) for i in range(m))
    return gin.GinibreModel(m, d1, d2, n, a, b)


def _check_deviation(cfg: VerifyConfig) -> Check:
    """Freeness gap against the crossing-count bound; zero through m = 2."""
    details = []
    ok = True
    for m in range(1, cfg.deviation_m + 1):
        model = _deviation_model(cfg, m, 2, 1)
        rep = gin.compare_bound(model, cfg.caps)
        if not rep.ok:
            ok = False
        if m <= 2 and rep.deviation != 0.0:
            ok = False
        details.append(f"m{m}:dev={_fmt(rep.deviation)}<=bound={_fmt(rep.bound)}")
    return Check("freeness_deviation", ok, " ".join(details))


def _check_mc_agreement(cfg: VerifyConfig) -> Check:
    """Exact Wick sum vs Monte Carlo, entrywise 4-sigma agreement."""
    model = _deviation_model(cfg, 2, 1, 1)
    exact = gin.exact_expectation(model, cfg.caps)
    total = 0
    within = 0
    for s in range(cfg.mc_seeds):
        mc = gin.mc_expectation(model, cfg.mc_samples, seed=cfg.seed + 100 + s, threads=cfg.threads)
        gap = np.abs(exact - mc.mean)
        tol = MC_NSIGMA * mc.stderr
        within += int(np.sum(gap <= tol))
        total += gap.size
    frac = within / total
    return Check(
        "mc_agreement",
        frac >= 0.95,
        f"entries={total} within_4sigma={_fmt(frac)}",
    )


def ginibre_suite(cfg: VerifyConfig) -> list[Check]:
    return [
        _check_dichotomy(cfg),
        _check_deviation(cfg),
        _check_mc_agreement(cfg),
    ]


SUITES = {
    "core": core_suite,
    "moments": moments_suite,
    "ginibre": ginibre_suite,
}


def run_suites(names: Sequence[str], cfg: VerifyConfig) -> dict:
    """Run the named suites and return a JSON-ready report."""
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    report: dict = {
        "config": {
            "max_m": cfg.max_m,
            "n": cfg.n,
            "seed": cfg.seed,
            "sel_max_m": cfg.sel_max_m,
            "ginibre_max_m": cfg.ginibre_max_m,
            "deviation_m": cfg.deviation_m,
            "mc_samples": cfg.mc_samples,
            "mc_seeds": cfg.mc_seeds,
        },
        "suites": {},
        "ok": True,
    }
    for name in names:
        checks = SUITES[name](cfg)
        if cfg.inject_failure:
            checks = checks + [
                Check("injected_failure", False, "self-test fixture: always fails")
            ]
        report["suites"][name] = [
            {"name": c.name, "ok": c.ok, "detail": c.detail} for c in checks
        ]
        if not all(c.ok for c in checks):
            report["ok"] = False
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
