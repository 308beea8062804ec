"""Command-line interface.

Every subcommand prints a single JSON document to stdout, deterministic for
a fixed invocation (same arguments, same ``TTE_CAPS``, any thread count).

Exit codes: 0 success, 1 verification failure (a mathematical check did not
hold, Monte Carlo misagreement, power iteration did not converge), 2 input
or usage error, 3 resource cap exceeded.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import click
import numpy as np

from .config import (
    Caps,
    InputError,
    ResourceCapError,
    SAMPLE_MARGIN,
    VerificationError,
    caps_from_env,
)
from . import ginibre as gin
from .extremal import ExtremalError, exponent_report, m_exhaustive
from .graph import TensorGraph, build, build_moment, to_dot, to_json as graph_json
from .perm import PartialPermutation, parse
from .tensor import (
    EvalResult,
    evaluate,
    make_u_pi,
    matrix_from_json,
    moment_trace,
    operator_norm,
    random_unitary,
)
from .verify import SUITES, VerifyConfig, report_json, run_suites


@dataclass(frozen=True)
class RunConfig:
    threads: int
    caps: Caps


def _echo_json(data: dict) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def _parse_legs(sigma_texts: tuple[str, ...], m: int) -> list[PartialPermutation]:
    if not sigma_texts:
        raise click.UsageError("at least one --sigma is required")
    return [parse(text, m) for text in sigma_texts]


def _load_mats(
    spec: str,
    legs: list[PartialPermutation],
    m: int,
    n: int,
    cfg: RunConfig,
) -> list[np.ndarray]:
    """Resolve a --mats specifier into one matrix per rectangle.

    ``upi:witness`` evaluates at the extremal search's own witness tuple;
    ``upi:r0,r1,...`` gives explicit per-rectangle pairing ranks;
    ``random:SEED`` draws seeded Haar unitaries; ``file:PATH`` reads a JSON
    array of matrix objects.
    """
    k = len(legs)
    dim = n**k
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise click.UsageError(f"--mats {spec!r}: expected kind:argument")
    if kind == "upi":
        if arg == "witness":
            res = m_exhaustive(build(legs, m), caps=cfg.caps)
            return [make_u_pi(res.witness[r], n, cfg.caps) for r in range(m)]
        try:
            ranks = [int(x) for x in arg.split(",")]
        except ValueError as exc:
            raise click.UsageError(f"--mats upi: bad rank list {arg!r}") from exc
        if len(ranks) != m:
            raise click.UsageError(f"--mats upi: need {m} ranks, got {len(ranks)}")
        from .graph import pairing_from_ranks

        pairing = pairing_from_ranks(k, ranks)
        return [make_u_pi(entry, n, cfg.caps) for entry in pairing]
    if kind == "random":
        try:
            seed = int(arg)
        except ValueError as exc:
            raise click.UsageError(f"--mats random: bad seed {arg!r}") from exc
        return [random_unitary(dim, [seed, r]) for r in range(m)]
    if kind == "file":
        try:
            with open(arg, "r", encoding="utf-8") as fh:
                entries = json.load(fh)
        except OSError as exc:
            raise click.UsageError(f"--mats file: cannot read {arg!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"--mats file: bad JSON in {arg!r}: {exc}") from exc
        if not isinstance(entries, list) or len(entries) != m:
            raise click.UsageError(f"--mats file: need a JSON array of {m} matrices")
        return [matrix_from_json(json.dumps(entry)) for entry in entries]
    raise click.UsageError(f"--mats {spec!r}: unknown kind {kind!r}")


def _matrix_payload(a: np.ndarray) -> dict:
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "re": a.real.tolist(),
        "im": a.imag.tolist(),
    }


@click.group()
@click.option("--threads", type=int, default=1, show_default=True, help="Worker threads (results are thread-count independent).")
@click.pass_context
def cli(ctx: click.Context, threads: int) -> None:
    """Extremal cycle bounds and dense evaluation for multi-leg trace words."""
    if threads < 1:
        raise click.UsageError("--threads must be >= 1")
    ctx.obj = RunConfig(threads=threads, caps=caps_from_env())


@cli.command()
@click.option("--m", type=int, required=True, help="Number of points / matrices.")
@click.option("--sigma", "sigma_texts", multiple=True, help="Leg map, cycles or arcs; repeatable.")
@click.option("--mult", "mults", multiple=True, type=int, help="Multiplicity per --sigma; repeatable.")
@click.option("--method", type=click.Choice(["exhaustive", "local", "auto"]), default="auto", show_default=True)
@click.option("--restarts", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def extremal(cfg: RunConfig, m: int, sigma_texts: tuple[str, ...], mults: tuple[int, ...], method: str, restarts: int, seed: int) -> None:
    """Maximum cycle count of a word, with witness and certificates."""
    legs = _parse_legs(sigma_texts, m)
    if mults and len(mults) != len(legs):
        raise click.UsageError("--mult must be given once per --sigma")
    rep = exponent_report(
        legs, list(mults) or None, method=method, restarts=restarts, seed=seed, caps=cfg.caps
    )
    res = rep.result
    g = build(
        [s for s, mult in zip(legs, mults or [1] * len(legs)) for _ in range(mult)], m
    )
    removed = [
        [
            g.edges[i].src + 1,
            g.edges[i].dst + 1,
            g.edges[i].color + 1,
            "yellow" if g.edges[i].yellow else "plain",
        ]
        for i in res.removed_edges
    ]
    _echo_json(
        {
            "m": rep.m,
            "k": rep.k,
            "M": res.M,
            "method": res.method,
            "witness": [[v + 1 for v in entry] for entry in res.witness],
            "upper_bound_backward": res.upper_bound_backward,
            "backward_bound_legs": rep.backward_bound,
            "certificate_edges_removed": removed,
            "formula": (
                None
                if rep.formula_value is None
                else {"value": rep.formula_value, "applicable": rep.formula_applicable}
            ),
            "nodes": res.nodes,
        }
    )


@cli.command(name="evaluate")
@click.option("--m", type=int, required=True)
@click.option("--sigma", "sigma_texts", multiple=True)
@click.option("--n", type=int, default=2, show_default=True, help="Base dimension per leg.")
@click.option("--mats", default="upi:witness", show_default=True, help="upi:witness | upi:r0,r1,... | random:SEED | file:PATH")
@click.option("--check-extremal", is_flag=True, help="Fail (exit 1) if the value exceeds n^M + margin.")
@click.pass_obj
def evaluate_cmd(cfg: RunConfig, m: int, sigma_texts: tuple[str, ...], n: int, mats: str, check_extremal: bool) -> None:
    """Evaluate a word on explicit matrices."""
    legs = _parse_legs(sigma_texts, m)
    matrices = _load_mats(mats, legs, m, n, cfg)
    result: EvalResult = evaluate(legs, matrices, n, cfg.caps)
    payload = {
        "n": n,
        "k": len(legs),
        "m": m,
        "value": _matrix_payload(result.value),
        "row_slots": [list(s) for s in result.row_slots],
        "col_slots": [list(s) for s in result.col_slots],
    }
    if check_extremal:
        res = m_exhaustive(build(legs, m), caps=cfg.caps)
        bound = float(n**res.M)
        observed = operator_norm(result.value, cfg.caps).value
        ok = observed <= bound + SAMPLE_MARGIN
        payload["check_extremal"] = {
            "M": res.M,
            "bound": bound,
            "observed_norm": observed,
            "ok": ok,
        }
        _echo_json(payload)
        if not ok:
            raise VerificationError(
                f"value norm {observed} exceeds extremal bound {bound}"
            )
        return
    _echo_json(payload)


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--sigma", "sigma_texts", multiple=True)
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--p", "p_values", multiple=True, type=int, default=(1, 2, 3), show_default=True)
@click.option("--mats", default="upi:witness", show_default=True)
@click.pass_obj
def moments(cfg: RunConfig, m: int, sigma_texts: tuple[str, ...], n: int, p_values: tuple[int, ...], mats: str) -> None:
    """Moment traces of a word value against the predicted growth exponent."""
    legs = _parse_legs(sigma_texts, m)
    matrices = _load_mats(mats, legs, m, n, cfg)
    res = m_exhaustive(build(legs, m), caps=cfg.caps)
    n_open = sum(m - len(s.domain) for s in legs)
    y = evaluate(legs, matrices, n, cfg.caps).value
    rows = []
    for p in p_values:
        trace = moment_trace(y, p)
        predicted = float(n ** (2 * p * res.M + n_open))
        rows.append(
            {
                "p": p,
                "trace": trace,
                "predicted_max": predicted,
                "attains": bool(abs(trace - predicted) <= 1e-9 * predicted),
            }
        )
    _echo_json({"M": res.M, "open": n_open, "n": n, "moments": rows})


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--sigma", "sigma_texts", multiple=True)
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--mats", default="upi:witness", show_default=True)
@click.pass_obj
def opnorm(cfg: RunConfig, m: int, sigma_texts: tuple[str, ...], n: int, mats: str) -> None:
    """Operator norm of a word value against the extremal bound n^M."""
    legs = _parse_legs(sigma_texts, m)
    matrices = _load_mats(mats, legs, m, n, cfg)
    res = m_exhaustive(build(legs, m), caps=cfg.caps)
    y = evaluate(legs, matrices, n, cfg.caps).value
    norm = operator_norm(y, cfg.caps)
    _echo_json(
        {
            "M": res.M,
            "n": n,
            "norm": norm.value,
            "enclosure": [norm.lower, norm.upper],
            "method": norm.method,
            "iterations": norm.iterations,
            "converged": norm.converged,
            "bound": float(n**res.M),
            "attains": bool(abs(norm.value - float(n**res.M)) <= 1e-9 * float(n**res.M)),
        }
    )
    if not norm.converged:
        raise VerificationError("operator norm power iteration did not converge")


@cli.command(name="ginibre")
@click.option("--m", type=int, required=True, help="Word length (pairs of Gaussian factors).")
@click.option("--d1", type=int, default=1, show_default=True)
@click.option("--d2", type=int, default=1, show_default=True)
@click.option("--n-base", type=int, default=2, show_default=True)
@click.option("--mc-samples", type=int, default=0, show_default=True, help="0 disables the Monte Carlo cross-check.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def ginibre_cmd(cfg: RunConfig, m: int, d1: int, d2: int, n_base: int, mc_samples: int, seed: int) -> None:
    """Wick pairing exponents, exact vs free expectation, optional MC."""
    dim = n_base ** (d1 + d2)
    a = tuple(random_unitary(dim, [seed, 0, i]) for i in range(m))
    b = tuple(random_unitary(dim, [seed, 1, i]) for i in range(m))
    model = gin.GinibreModel(m, d1, d2, n_base, a, b)
    pairings = []
    for theta in gin.enumerate_theta(m, cfg.caps):
        term = gin.pairing_term_exponent(theta, d1, d2, caps=cfg.caps)
        pairings.append(
            {
                "theta": list(theta.images),
                "noncrossing": term.noncrossing,
                "M": term.report.result.M,
                "bound_ok": term.ok,
            }
        )
    payload: dict = {
        "m": m,
        "d1": d1,
        "d2": d2,
        "n_base": n_base,
        "pairings": pairings,
        "deviation_norm": None,
        "bound": None,
        "bound_ok": None,
        "mc": None,
    }
    if d1 > d2:
        rep = gin.compare_bound(model, cfg.caps)
        payload["deviation_norm"] = rep.deviation
        payload["bound"] = rep.bound
        payload["bound_ok"] = rep.ok
    else:
        payload["notice"] = "bound check skipped: requires d1 > d2"
    if mc_samples > 0:
        exact = gin.exact_expectation(model, cfg.caps)
        mc = gin.mc_expectation(model, mc_samples, seed=seed, threads=cfg.threads)
        gap = np.abs(exact - mc.mean)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = np.where(mc.stderr > 0, gap / np.where(mc.stderr > 0, mc.stderr, 1.0), np.where(gap > 0, np.inf, 0.0))
        max_z = float(np.max(z))
        payload["mc"] = {
            "samples": mc.samples,
            "max_z": max_z if np.isfinite(max_z) else None,
        }
        _echo_json(payload)
        if not np.isfinite(max_z) or max_z > 4.0:
            raise VerificationError(f"Monte Carlo disagrees with the exact sum (max z = {max_z})")
        if payload["bound_ok"] is False:
            raise VerificationError("freeness deviation exceeds the crossing bound")
        return
    _echo_json(payload)
    if payload["bound_ok"] is False:
        raise VerificationError("freeness deviation exceeds the crossing bound")


@cli.command(name="verify")
@click.option("--suite", type=click.Choice(sorted(SUITES) + ["all"]), default="all", show_default=True)
@click.option("--max-m", type=int, default=3, show_default=True)
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--sel-max-m", type=int, default=2, show_default=True)
@click.option("--ginibre-max-m", type=int, default=2, show_default=True)
@click.option("--deviation-m", type=int, default=2, show_default=True)
@click.option("--mc-samples", type=int, default=2000, show_default=True)
@click.option("--mc-seeds", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inject-failure", is_flag=True, hidden=True, help="Self-test: add an always-failing check.")
@click.pass_obj
def verify_cmd(cfg: RunConfig, suite: str, max_m: int, n: int, sel_max_m: int, ginibre_max_m: int, deviation_m: int, mc_samples: int, mc_seeds: int, seed: int, inject_failure: bool) -> None:
    """Run the self-verification suites and report JSON."""
    names = sorted(SUITES) if suite == "all" else [suite]
    vcfg = VerifyConfig(
        max_m=max_m,
        n=n,
        seed=seed,
        sel_max_m=sel_max_m,
        ginibre_max_m=ginibre_max_m,
        deviation_m=deviation_m,
        mc_samples=mc_samples,
        mc_seeds=mc_seeds,
        threads=cfg.threads,
        caps=cfg.caps,
        inject_failure=inject_failure,
    )
    report = run_suites(names, vcfg)
    click.echo(report_json(report), nl=False)
    if not report["ok"]:
        raise VerificationError("one or more verification checks failed")


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--sigma", "sigma_texts", multiple=True)
@click.option("--moment-p", type=int, default=0, show_default=True, help="Render the 2p-block moment ring instead of the word graph.")
@click.option("--witness/--no-witness", default=False, show_default=True, help="Overlay the optimal blue pairing.")
@click.option("--format", "fmt", type=click.Choice(["dot", "json"]), default="dot", show_default=True)
@click.pass_obj
def dot(cfg: RunConfig, m: int, sigma_texts: tuple[str, ...], moment_p: int, witness: bool, fmt: str) -> None:
    """Export the word graph (or its moment ring) as DOT or JSON."""
    legs = _parse_legs(sigma_texts, m)
    g: TensorGraph = build_moment(legs, m, moment_p) if moment_p > 0 else build(legs, m)
    pairing = None
    if witness:
        pairing = m_exhaustive(g, caps=cfg.caps).witness
    if fmt == "json":
        click.echo(graph_json(g))
        return
    click.echo(to_dot(g, pairing), nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return int(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except VerificationError as exc:
        click.echo(f"verification failure: {exc}", err=True)
        return 1
    except ExtremalError as exc:
        click.echo(f"verification failure: {exc}", err=True)
        return 1
    except ResourceCapError as exc:
        click.echo(f"resource cap: {exc}", err=True)
        return 3
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
