"""Extremal cycle counts over blue pairings.

The central quantity is ``M(g)``: the maximum, over all blue pairings of a
graph, of the number of closed cycles.  ``N ** M`` is then the exact maximum
modulus of the evaluated word over contractive inputs, which is what makes
this number worth computing exactly.

Three routes are provided.  :func:`m_exhaustive` is a depth-first search
over per-rectangle color permutations with an admissible pruning bound (and
a plain-enumeration mode used to validate the pruning).  The bound combines
two counts that both dominate the number of cycles still closable:

* every future cycle must contain a blue edge, so cycles are limited by the
  current walk fragments plus ``k`` fresh blue edges per unassigned
  rectangle;
* every cycle must traverse a backward plain edge or wind the moment ring
  through yellow edges at every block boundary, so cycles are also limited
  by the components that still carry such an edge and can still close.

:func:`m_local_search` climbs by splitting cycles: whenever one cycle visits
the same rectangle through two blue edges, swapping their endpoints splits
it in two, gaining exactly one cycle.  A pairing where no such swap exists
is locally optimal; the best over seeded restarts is a lower bound for
``M``.  :func:`multi_backward_formula` covers the closed-form regime where
all legs repeat a single map often enough.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .config import Caps, DEFAULT_CAPS, ResourceCapError
from .graph import (
    GraphError,
    Pairing,
    Selection,
    TensorGraph,
    build,
    count_cycles,
    enumerate_pairings,
    is_simple,
    n_pairings,
    pairing_from_ranks,
    _color_perms,
)
from .perm import PartialPermutation, full_cycle, interval_merge_count

__all__ = [
    "ExtremalError",
    "ExtremalResult",
    "ExponentReport",
    "graph_backward_bound",
    "backward_upper_bound",
    "m_exhaustive",
    "m_local_search",
    "simple_certificate",
    "moment_exponent",
    "multi_backward_formula",
    "exponent_report",
]


class ExtremalError(ValueError):
    """A witness or argument does not satisfy the documented contract."""


@dataclass(frozen=True)
class ExtremalResult:
    """Outcome of an extremal search.

    ``witness`` is the best blue pairing found (per-rectangle color image
    tuples, 0-based).  ``method`` is ``"exhaustive"``, ``"local_search"``,
    or ``"closed_form"``; only exhaustive results carry a certificate: a
    full-rectangle selection whose complement removes one edge per optimal
    cycle, leaving a graph with no cycles under any pairing.  The
    certificate is ``None`` when no tried cut passes the simplicity check
    (the construction is only guaranteed for full-permutation legs).
    ``nodes`` counts pairing evaluations charged against the caps.
    """

    M: int
    witness: Pairing
    method: str
    upper_bound_backward: int
    certificate: Selection | None = None
    removed_edges: tuple[int, ...] = ()
    nodes: int = 0


def graph_backward_bound(g: TensorGraph) -> int:
    """Edge-counting upper bound for ``M(g)``.

    Every cycle uses a backward plain edge or crosses every block boundary
    on yellow edges, and cycles are disjoint, so ``M`` is at most the number
    of backward plain edges plus the smallest per-boundary yellow count.
    For a word graph this is the total backward count of the leg maps.
    """
    n_backward = sum(1 for e in g.edges if not e.yellow and g.is_backward(e))
    per_boundary: dict[int, int] = {}
    for e in g.edges:
        if e.yellow:
            b = g.yellow_boundary(e)
            per_boundary[b] = per_boundary.get(b, 0) + 1
    return n_backward + (min(per_boundary.values()) if per_boundary else 0)


def backward_upper_bound(sigmas: Sequence[PartialPermutation]) -> int:
    """Total backward count of the leg maps (upper bound for the word's ``M``)."""
    return sum(s.backward_count() for s in sigmas)


class _Search:
    """Branch-and-bound state: union-find with rollback over walk fragments.

    Vertices are the ``2 * n_rects * k`` in/out slots.  Plain and yellow
    edges are unioned once at construction; blue edges are applied and
    undone as the search assigns per-rectangle color permutations in
    lexicographic order.  Per-root statistics track enough structure to
    evaluate the pruning bound in O(blocks) per node.
    """

    def __init__(self, g: TensorGraph, cap: int):
        self.g = g
        self.k = g.k
        self.R = g.n_rects
        self.cap = cap
        self.perms = _color_perms(g.k)
        nv = self.R * self.k
        V = 2 * nv
        self.parent = list(range(V))
        self.size = [1] * V
        self.blue = [0] * V
        self.bwd = [0] * V
        self.ymask = [0] * V
        self.dead = [0] * V
        has_yellow = any(e.yellow for e in g.edges)
        self.n_bound = g.n_blocks if has_yellow else 0
        for r in range(self.R):
            for j in range(self.k):
                if j in g.open_in[r]:
                    self.dead[r * self.k + j] = 1
                if j in g.open_out[r]:
                    self.dead[nv + r * self.k + j] = 1
        for e in g.edges:
            a = nv + e.src * self.k + e.color
            b = e.dst * self.k + e.color
            self.parent[b] = a
            self.size[a] = 2
            if e.yellow:
                self.ymask[a] = 1 << g.yellow_boundary(e)
            elif g.is_backward(e):
                self.bwd[a] = 1
        self.closed = 0
        self.frag = 0
        self.cbnoy = 0
        self.cy = [0] * self.n_bound
        self.log: list[tuple[int, int, int, int, int, int, int]] = []
        for v in range(V):
            if self.parent[v] == v:
                self._add(v)
        self.nodes = 0
        self.best = -1
        self.best_ranks: tuple[int, ...] = ()
        self.stack: list[int] = []
        self.nv = nv

    def _find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            x = p[x]
        return x

    def _add(self, r: int) -> None:
        if self.dead[r]:
            return
        if self.blue[r]:
            self.frag += 1
        ym = self.ymask[r]
        if self.bwd[r] and not ym:
            self.cbnoy += 1
        while ym:
            self.cy[(ym & -ym).bit_length() - 1] += 1
            ym &= ym - 1

    def _rm(self, r: int) -> None:
        if self.dead[r]:
            return
        if self.blue[r]:
            self.frag -= 1
        ym = self.ymask[r]
        if self.bwd[r] and not ym:
            self.cbnoy -= 1
        while ym:
            self.cy[(ym & -ym).bit_length() - 1] -= 1
            ym &= ym - 1

    def _blue(self, in_id: int, out_id: int) -> None:
        ra, rb = self._find(in_id), self._find(out_id)
        if ra == rb:
            self._rm(ra)
            self.closed += 1
            self.log.append((0, ra, 0, 0, 0, 0, 0))
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self._rm(ra)
        self._rm(rb)
        self.log.append((1, rb, ra, self.blue[ra], self.bwd[ra], self.ymask[ra], self.dead[ra]))
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.blue[ra] += self.blue[rb] + 1
        self.bwd[ra] += self.bwd[rb]
        self.ymask[ra] |= self.ymask[rb]
        self.dead[ra] += self.dead[rb]
        self._add(ra)

    def _undo(self, mark: int) -> None:
        while len(self.log) > mark:
            kind, rb, ra, ob, obw, oym, od = self.log.pop()
            if kind == 0:
                self.closed -= 1
                self._add(rb)
            else:
                self._rm(ra)
                self.parent[rb] = rb
                self.size[ra] -= self.size[rb]
                self.blue[ra] = ob
                self.bwd[ra] = obw
                self.ymask[ra] = oym
                self.dead[ra] = od
                self._add(ra)
                self._add(rb)

    def _bound(self, depth: int) -> int:
        f1 = self.frag + self.k * (self.R - depth)
        f2 = self.cbnoy + (min(self.cy) if self.cy else 0)
        return self.closed + (f1 if f1 < f2 else f2)

    def run(self) -> None:
        self._dfs(0)

    def _dfs(self, depth: int) -> None:
        if depth == self.R:
            if self.closed > self.best:
                self.best = self.closed
                self.best_ranks = tuple(self.stack)
            return
        base_in = depth * self.k
        base_out = self.nv + depth * self.k
        for rank, perm in enumerate(self.perms):
            self.nodes += 1
            if self.nodes > self.cap:
                raise ResourceCapError(
                    f"extremal search exceeded the pairing budget ({self.cap})"
                )
            mark = len(self.log)
            for j in range(self.k):
                self._blue(base_in + j, base_out + perm[j])
            self.stack.append(rank)
            if self._bound(depth + 1) > self.best:
                self._dfs(depth + 1)
            self.stack.pop()
            self._undo(mark)


def m_exhaustive(
    g: TensorGraph, caps: Caps = DEFAULT_CAPS, prune: bool = True
) -> ExtremalResult:
    """Exact maximum cycle count with the lexicographically smallest witness.

    With ``prune=True`` (the default) a branch-and-bound search explores the
    per-rectangle color permutations in lexicographic order, charging one
    pairing evaluation per node against ``caps.max_pairings``.  With
    ``prune=False`` every pairing is enumerated through the independent
    cycle-counting route; the full space must then fit the cap up front.
    Both modes return the same value and the same witness (the first
    pairing, in lexicographic rank order, that attains the maximum).
    """
    bound = graph_backward_bound(g)
    if prune:
        search = _Search(g, caps.max_pairings)
        # seed the incumbent one below a local optimum: subtrees that cannot
        # beat it are cut immediately, while every subtree holding an optimal
        # leaf keeps bound >= M > incumbent, so the first leaf that improves
        # the incumbent is still the lexicographically smallest optimum
        incumbent = m_local_search(g, restarts=8, seed=1)
        search.best = incumbent.M - 1
        search.run()
        best = search.best
        witness = pairing_from_ranks(g.k, search.best_ranks)
        nodes = search.nodes
    else:
        space = n_pairings(g.k, g.n_rects)
        if space > caps.max_pairings:
            raise ResourceCapError(
                f"plain enumeration needs {space} pairings, cap is {caps.max_pairings}"
            )
        best = -1
        witness = None
        for pairing in enumerate_pairings(g):
            c = count_cycles(g, pairing).n_cycles
            if c > best:
                best, witness = c, pairing
        nodes = space
        assert witness is not None
    try:
        certificate, removed = simple_certificate(g, witness, _trusted_m=best)
    except ExtremalError:
        # guaranteed to succeed for full-permutation legs; best-effort
        # elsewhere (partial legs and block joins admit counterexamples)
        certificate, removed = None, ()
    return ExtremalResult(
        M=best,
        witness=witness,
        method="exhaustive",
        upper_bound_backward=bound,
        certificate=certificate,
        removed_edges=removed,
        nodes=nodes,
    )


def m_local_search(
    g: TensorGraph, restarts: int = 32, seed: int = 0
) -> ExtremalResult:
    """Cycle-splitting hill climb from seeded random pairings.

    Each restart draws a random pairing, then repeatedly picks a random
    applicable swap (two blue edges of one rectangle on a common cycle) and
    applies it; every swap increases the cycle count by exactly one, which
    is asserted.  The result is the best local optimum over all restarts
    (ties broken toward the lexicographically smallest rank tuple) and is a
    lower bound for the exhaustive maximum.
    """
    if restarts < 1:
        raise ExtremalError("need at least one restart")
    perms = _color_perms(g.k)
    rank_of = {p: i for i, p in enumerate(perms)}
    best: tuple[int, tuple[int, ...]] | None = None
    for t in range(restarts):
        rng = random.Random(f"{seed}:{t}")
        pairing = [perms[rng.randrange(len(perms))] for _ in range(g.n_rects)]
        report = count_cycles(g, tuple(pairing))
        while True:
            moves: list[tuple[int, int, int]] = []
            for cyc in report.cycles:
                per_rect: dict[int, list[int]] = {}
                for r, j, side in cyc:
                    if side == 0:
                        per_rect.setdefault(r, []).append(j)
                for r in sorted(per_rect):
                    js = sorted(per_rect[r])
                    for a in range(len(js)):
                        for b in range(a + 1, len(js)):
                            moves.append((r, js[a], js[b]))
            if not moves:
                break
            r, j1, j2 = moves[rng.randrange(len(moves))]
            entry = list(pairing[r])
            entry[j1], entry[j2] = entry[j2], entry[j1]
            pairing[r] = tuple(entry)
            new_report = count_cycles(g, tuple(pairing))
            assert new_report.n_cycles == report.n_cycles + 1, "swap must split one cycle"
            report = new_report
        ranks = tuple(rank_of[p] for p in pairing)
        cand = (report.n_cycles, ranks)
        if best is None or cand[0] > best[0] or (cand[0] == best[0] and ranks < best[1]):
            best = cand
    assert best is not None
    return ExtremalResult(
        M=best[0],
        witness=pairing_from_ranks(g.k, best[1]),
        method="local_search",
        upper_bound_backward=graph_backward_bound(g),
    )


def simple_certificate(
    g: TensorGraph, witness: Pairing, _trusted_m: int | None = None
) -> tuple[Selection, tuple[int, ...]]:
    """Cut one edge per witness cycle; the rest must be cycle-free.

    Removing the smallest-index non-blue edge of each cycle of an optimal
    witness leaves a full-rectangle selection on which no pairing closes a
    cycle; the complement has exactly ``M`` edges.  That is guaranteed when
    every leg is a full permutation, and checked via :func:`is_simple`
    regardless.  If the check fails (possible with partial legs or block
    joins) a second cut is tried, the smallest backward edge per cycle;
    when neither cut is simple this raises :class:`ExtremalError`, and
    searches report the certificate as absent.  A witness that routes two
    blue edges of one rectangle around a single cycle is provably not
    optimal and is rejected.
    """
    report = count_cycles(g, witness)
    for cyc in report.cycles:
        seen_rects: set[int] = set()
        for r, _, side in cyc:
            if side == 0:
                if r in seen_rects:
                    raise ExtremalError(
                        "witness is not optimal: a cycle visits one rectangle twice"
                    )
                seen_rects.add(r)
    if _trusted_m is not None and report.n_cycles != _trusted_m:
        raise ExtremalError(
            f"witness closes {report.n_cycles} cycles, expected {_trusted_m}"
        )
    edge_at: dict[tuple[int, int], int] = {
        (e.src, e.color): idx for idx, e in enumerate(g.edges)
    }
    per_cycle = [
        sorted(edge_at[(r, j)] for r, j, side in cyc if side == 1)
        for cyc in report.cycles
    ]
    candidates = [[min(on_cycle) for on_cycle in per_cycle]]
    backward = [
        [i for i in on_cycle if not g.edges[i].yellow and g.is_backward(g.edges[i])]
        for on_cycle in per_cycle
    ]
    if all(backward) and [b[0] for b in backward] != candidates[0]:
        candidates.append([b[0] for b in backward])
    for choice in candidates:
        removed = sorted(choice)
        keep = [idx for idx in range(len(g.edges)) if idx not in set(removed)]
        selection = Selection(tuple(range(g.n_rects)), tuple(keep))
        if is_simple(g, selection):
            return selection, tuple(removed)
    raise ExtremalError("certificate construction left a closable cycle")


def moment_exponent(
    sigmas: Sequence[PartialPermutation], p: int, caps: Caps = DEFAULT_CAPS
) -> int:
    """Growth exponent of the ``p``-th moment trace: ``2 p M + open count.``

    ``M`` is the word's own maximum cycle count; the additive term counts
    the open out-vertices (one per undefined point per leg).  This equals
    the exhaustive maximum over the ``2p``-block moment ring directly,
    which the test suite checks for small ``p``.
    """
    if not sigmas:
        raise GraphError("need at least one leg")
    m = sigmas[0].m
    g = build(sigmas, m)
    result = m_exhaustive(g, caps=caps)
    n_open = sum(m - len(s.domain) for s in sigmas)
    return 2 * p * result.M + n_open


def multi_backward_formula(sigma: PartialPermutation, k: int) -> tuple[int, bool]:
    """Closed-form maximum for ``k`` identical legs: ``R + k - 1``.

    ``R`` is the backward count of the map.  The formula is exact once
    ``k`` exceeds the merged backward-interval count: applicability is
    ``k >= interval_merge_count(sigma) + 1`` (and ``k >= 2``).  Returns
    ``(value, applicable)``.
    """
    if k < 2:
        raise ExtremalError("the repeated-leg formula needs k >= 2")
    value = sigma.backward_count() + k - 1
    applicable = k >= interval_merge_count(sigma) + 1
    return value, applicable


@dataclass(frozen=True)
class ExponentReport:
    """Full extremal picture for one word: search result plus bounds."""

    m: int
    k: int
    result: ExtremalResult
    backward_bound: int
    formula_value: int | None
    formula_applicable: bool | None


def exponent_report(
    sigmas: Sequence[PartialPermutation],
    leg_multiplicities: Sequence[int] | None = None,
    method: str = "auto",
    restarts: int = 32,
    seed: int = 0,
    caps: Caps = DEFAULT_CAPS,
) -> ExponentReport:
    """Compute ``M`` for a word with repeated legs and report the bounds.

    ``leg_multiplicities`` expands each map into that many identical legs.
    ``method`` is ``"exhaustive"``, ``"local"``, or ``"auto"``; auto runs
    exhaustively when the pairing space fits the cap, falls back to the
    closed form when every leg after the first is the increasing full cycle
    and the formula applies, and otherwise local search.
    """
    if not sigmas:
        raise GraphError("need at least one leg")
    if leg_multiplicities is None:
        leg_multiplicities = [1] * len(sigmas)
    if len(leg_multiplicities) != len(sigmas):
        raise ExtremalError("one multiplicity per map required")
    if any(a < 1 for a in leg_multiplicities):
        raise ExtremalError("multiplicities must be >= 1")
    legs: list[PartialPermutation] = []
    for s, mult in zip(sigmas, leg_multiplicities):
        legs.extend([s] * mult)
    m = legs[0].m
    g = build(legs, m)
    k = len(legs)
    gamma = full_cycle(m)
    chain_pattern = k >= 2 and all(s == gamma for s in legs[1:])
    formula_value: int | None = None
    formula_applicable: bool | None = None
    if chain_pattern:
        formula_value, formula_applicable = multi_backward_formula(legs[0], k)
    if method not in ("auto", "exhaustive", "local"):
        raise ExtremalError(f"unknown method {method!r}")
    if method == "exhaustive":
        result = m_exhaustive(g, caps=caps)
    elif method == "local":
        result = m_local_search(g, restarts=restarts, seed=seed)
    else:
        if n_pairings(g.k, g.n_rects) <= caps.max_pairings:
            result = m_exhaustive(g, caps=caps)
        elif formula_applicable:
            result = ExtremalResult(
                M=formula_value,
                witness=(),
                method="closed_form",
                upper_bound_backward=graph_backward_bound(g),
            )
        else:
            result = m_local_search(g, restarts=restarts, seed=seed)
    return ExponentReport(
        m=m,
        k=k,
        result=result,
        backward_bound=backward_upper_bound(legs),
        formula_value=formula_value,
        formula_applicable=formula_applicable,
    )
