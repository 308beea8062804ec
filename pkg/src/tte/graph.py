"""Colored multigraphs encoding multi-leg partial-trace words.

A word in ``m`` matrix letters with ``k`` legs is drawn as ``m`` rectangles,
one per letter, each carrying ``k`` in-vertices and ``k`` out-vertices (one
per leg color).  The ``j``-th leg map contributes a *plain* edge of color
``j`` from rectangle ``i`` to rectangle ``sigma_j(i)`` for every point where
it is defined; colors where it is undefined leave open vertices.

Moment graphs chain ``2p`` alternating copies of the word graph and its
adjoint into a ring, joining what used to be open vertices with *yellow*
edges; they have no open vertices of their own.

A *blue pairing* closes the picture: for every rectangle it chooses a
permutation of colors, wiring in-vertex ``j`` to out-vertex ``pi(j)``
inside the rectangle.  Once a pairing is fixed the whole structure is a
functional graph and decomposes into cycles plus (for partial words) open
paths; :func:`count_cycles` reports that decomposition deterministically.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

from .config import Caps, DEFAULT_CAPS, InputError, ResourceCapError
from .perm import PartialPermutation

__all__ = [
    "GraphError",
    "Rect",
    "Edge",
    "TensorGraph",
    "Selection",
    "CycleReport",
    "build",
    "build_adjoint",
    "build_moment",
    "count_cycles",
    "n_pairings",
    "pairing_from_ranks",
    "pairing_ranks",
    "enumerate_pairings",
    "select",
    "full_selection",
    "complement",
    "is_simple",
    "brute_force_has_cycle",
    "to_dot",
    "to_json",
    "from_json",
]


class GraphError(InputError):
    """Structurally invalid graph, selection, or pairing."""


@dataclass(frozen=True)
class Rect:
    """One rectangle: letter ``index`` (1-based) inside copy ``block``."""

    index: int
    star: bool = False
    block: int = 0


@dataclass(frozen=True)
class Edge:
    """A plain or yellow edge between rectangle positions (0-based)."""

    src: int
    dst: int
    color: int
    yellow: bool = False

    @property
    def kind(self) -> str:
        return "yellow" if self.yellow else "plain"


@dataclass(frozen=True)
class Selection:
    """Subsets of rectangle positions and edge indices, both sorted.

    A selection produced by :func:`select` is *valid*: every selected edge
    has both endpoints selected.  :func:`complement` returns the raw removed
    pair, which need not be valid on its own.
    """

    rects: tuple[int, ...]
    edges: tuple[int, ...]


@dataclass(frozen=True)
class TensorGraph:
    """Immutable graph structure shared by plain, adjoint, and moment words.

    ``open_in[r]`` / ``open_out[r]`` hold the 0-based colors whose in/out
    vertex at rectangle position ``r`` has no plain or yellow edge.
    ``n_blocks`` is 1 for single-word graphs and ``2p`` for moment graphs.
    """

    k: int
    rects: tuple[Rect, ...]
    edges: tuple[Edge, ...]
    open_in: tuple[frozenset[int], ...]
    open_out: tuple[frozenset[int], ...]
    n_blocks: int = 1

    @property
    def n_rects(self) -> int:
        return len(self.rects)

    def rect_label(self, pos: int) -> str:
        r = self.rects[pos]
        base = f"A{r.index}" + ("*" if r.star else "")
        if self.n_blocks > 1:
            base += f"@{r.block // 2 + 1}"
        return base

    def is_backward(self, edge: Edge) -> bool:
        """Whether the generating arc of a plain edge steps backward.

        An edge drawn from the arc ``i -> sigma(i)`` is backward when
        ``sigma(i) <= i``, for plain and adjoint copies alike (adjoint
        copies reverse the drawing, not the arc).  Yellow edges are never
        backward.
        """
        if edge.yellow:
            return False
        a, b = self.rects[edge.src], self.rects[edge.dst]
        if a.star:
            return a.index <= b.index
        return b.index <= a.index

    def yellow_boundary(self, edge: Edge) -> int:
        """Index of the block boundary a yellow edge crosses (its source block)."""
        if not edge.yellow:
            raise GraphError("not a yellow edge")
        return self.rects[edge.src].block

    def n_open(self) -> int:
        return sum(len(s) for s in self.open_in)


def _validate(g: TensorGraph) -> None:
    in_seen: set[tuple[int, int]] = set()
    out_seen: set[tuple[int, int]] = set()
    for e in g.edges:
        if not (0 <= e.src < g.n_rects and 0 <= e.dst < g.n_rects):
            raise GraphError(f"edge {e} leaves the rectangle range")
        if not 0 <= e.color < g.k:
            raise GraphError(f"edge {e} has color outside 0..{g.k - 1}")
        if (e.dst, e.color) in in_seen or (e.src, e.color) in out_seen:
            raise GraphError(f"edge {e} collides with another on a vertex")
        in_seen.add((e.dst, e.color))
        out_seen.add((e.src, e.color))
    for r in range(g.n_rects):
        for j in range(g.k):
            ins = ((r, j) in in_seen) + (j in g.open_in[r])
            outs = ((r, j) in out_seen) + (j in g.open_out[r])
            if ins != 1 or outs != 1:
                raise GraphError(
                    f"vertex (rect {r}, color {j}) has {ins} in / {outs} out connections"
                )


def _check_legs(sigmas: Sequence[PartialPermutation], m: int) -> None:
    if not sigmas:
        raise GraphError("need at least one leg")
    if m < 1:
        raise GraphError(f"need at least one rectangle, got m={m}")
    for j, s in enumerate(sigmas):
        if s.m != m:
            raise GraphError(f"leg {j + 1} acts on {s.m} points, expected {m}")


def build(sigmas: Sequence[PartialPermutation], m: int) -> TensorGraph:
    """Graph of the word itself: color-``j`` edges ``i -> sigma_j(i)``."""
    _check_legs(sigmas, m)
    k = len(sigmas)
    edges = [
        Edge(i - 1, v - 1, j)
        for j, s in enumerate(sigmas)
        for i, v in s.arcs()
    ]
    open_in = tuple(
        frozenset(j for j, s in enumerate(sigmas) if (t + 1) not in s.image)
        for t in range(m)
    )
    open_out = tuple(
        frozenset(j for j, s in enumerate(sigmas) if (t + 1) not in s.domain)
        for t in range(m)
    )
    g = TensorGraph(k, tuple(Rect(i) for i in range(1, m + 1)), tuple(edges), open_in, open_out)
    _validate(g)
    return g


def build_adjoint(sigmas: Sequence[PartialPermutation], m: int) -> TensorGraph:
    """Graph of the adjoint word: color-``j`` edges ``sigma_j(i) -> i``.

    Open vertices swap roles relative to :func:`build`: the in-vertex at
    starred letter ``i`` is open when ``sigma_j`` is undefined at ``i``, the
    out-vertex when ``i`` is not hit by ``sigma_j``.
    """
    _check_legs(sigmas, m)
    k = len(sigmas)
    edges = [
        Edge(v - 1, i - 1, j)
        for j, s in enumerate(sigmas)
        for i, v in s.arcs()
    ]
    open_in = tuple(
        frozenset(j for j, s in enumerate(sigmas) if (t + 1) not in s.domain)
        for t in range(m)
    )
    open_out = tuple(
        frozenset(j for j, s in enumerate(sigmas) if (t + 1) not in s.image)
        for t in range(m)
    )
    g = TensorGraph(
        k, tuple(Rect(i, star=True) for i in range(1, m + 1)), tuple(edges), open_in, open_out
    )
    _validate(g)
    return g


def build_moment(sigmas: Sequence[PartialPermutation], m: int, p: int) -> TensorGraph:
    """Ring of ``2p`` alternating word and adjoint copies, yellow-joined.

    Blocks ``0, 2, 4, ...`` are word copies, blocks ``1, 3, 5, ...`` adjoint
    copies.  Where copy ``b`` has an open out-vertex, a yellow edge of the
    same color and letter runs to copy ``b + 1`` (wrapping around), so the
    ring has no open vertices at all.  The yellow edge count is
    ``2 * p * sum(m - len(s.domain) for s in sigmas)``.
    """
    _check_legs(sigmas, m)
    if p < 1:
        raise GraphError(f"moment order must be >= 1, got {p}")
    k = len(sigmas)
    nb = 2 * p
    rects = tuple(
        Rect(i, star=(b % 2 == 1), block=b) for b in range(nb) for i in range(1, m + 1)
    )
    edges: list[Edge] = []
    for b in range(nb):
        base = b * m
        for j, s in enumerate(sigmas):
            for i, v in s.arcs():
                if b % 2 == 0:
                    edges.append(Edge(base + i - 1, base + v - 1, j))
                else:
                    edges.append(Edge(base + v - 1, base + i - 1, j))
    for b in range(nb):
        base = b * m
        nxt = ((b + 1) % nb) * m
        for j, s in enumerate(sigmas):
            if b % 2 == 0:
                # word copy: out-vertex open where sigma_j is undefined
                holes = sorted(set(range(1, m + 1)) - s.domain)
            else:
                # adjoint copy: out-vertex open where sigma_j misses
                holes = sorted(set(range(1, m + 1)) - s.image)
            for i in holes:
                edges.append(Edge(base + i - 1, nxt + i - 1, j, yellow=True))
    empty = tuple(frozenset() for _ in range(nb * m))
    g = TensorGraph(k, rects, tuple(edges), empty, empty, n_blocks=nb)
    _validate(g)
    return g


# ---------------------------------------------------------------------------
# blue pairings

Pairing = tuple[tuple[int, ...], ...]


def n_pairings(k: int, n_rects: int) -> int:
    return math.factorial(k) ** n_rects


def _color_perms(k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(k)))


def pairing_from_ranks(k: int, ranks: Sequence[int]) -> Pairing:
    """Per-rectangle permutation ranks (lex order on image tuples) to a pairing."""
    perms = _color_perms(k)
    out = []
    for r in ranks:
        if not 0 <= r < len(perms):
            raise GraphError(f"pairing rank {r} outside 0..{len(perms) - 1}")
        out.append(perms[r])
    return tuple(out)


def pairing_ranks(k: int, pairing: Pairing) -> tuple[int, ...]:
    perms = {p: i for i, p in enumerate(_color_perms(k))}
    try:
        return tuple(perms[tuple(entry)] for entry in pairing)
    except KeyError as exc:
        raise GraphError(f"entry {exc.args[0]!r} is not a permutation of colors") from exc


def _check_pairing(g: TensorGraph, pairing: Pairing) -> None:
    if len(pairing) != g.n_rects:
        raise GraphError(
            f"pairing has {len(pairing)} entries for {g.n_rects} rectangles"
        )
    want = tuple(range(g.k))
    for r, entry in enumerate(pairing):
        if tuple(sorted(entry)) != want:
            raise GraphError(f"pairing entry {entry!r} at rectangle {r} is not a color permutation")


def enumerate_pairings(
    g: TensorGraph, start: int = 0, stop: int | None = None
) -> Iterator[Pairing]:
    """Yield blue pairings in lexicographic rank order.

    The global rank of a pairing is the mixed-radix number formed by the
    per-rectangle permutation ranks, first rectangle most significant, so
    ``enumerate_pairings(g, a, b)`` followed by ``enumerate_pairings(g, b, c)``
    concatenates to ``enumerate_pairings(g, a, c)``.
    """
    perms = _color_perms(g.k)
    total = len(perms) ** g.n_rects
    if stop is None:
        stop = total
    if not 0 <= start <= stop <= total:
        raise GraphError(f"range [{start}, {stop}) outside [0, {total})")
    base = len(perms)
    n = g.n_rects
    for idx in range(start, stop):
        digits = [0] * n
        rem = idx
        for pos in range(n - 1, -1, -1):
            rem, digits[pos] = divmod(rem, base)
        yield tuple(perms[d] for d in digits)


# ---------------------------------------------------------------------------
# cycle counting

#: A vertex is ``(rect_position, color, side)`` with side 0 = in, 1 = out.
Vertex = tuple[int, int, int]


@dataclass(frozen=True)
class CycleReport:
    """Deterministic decomposition of a paired graph into cycles and paths.

    Cycles are listed in ascending order of their minimal vertex (vertices
    ordered by rectangle position, then color, then in-before-out) and each
    cycle starts at that minimal vertex.  Open paths are listed by their
    start vertex.  ``backward_per_cycle`` and ``yellow_per_cycle`` count the
    backward plain edges and yellow edges traversed by each cycle.
    """

    cycles: tuple[tuple[Vertex, ...], ...]
    open_paths: tuple[tuple[Vertex, ...], ...]
    backward_per_cycle: tuple[int, ...]
    yellow_per_cycle: tuple[int, ...]

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)


def count_cycles(
    g: TensorGraph, pairing: Pairing, selection: Selection | None = None
) -> CycleReport:
    """Decompose the functional graph induced by a blue pairing.

    With a selection, only selected rectangles and edges participate; the
    pairing is still indexed by global rectangle position and entries at
    unselected rectangles are ignored.
    """
    _check_pairing(g, pairing)
    if selection is None:
        sel_rects = tuple(range(g.n_rects))
        sel_edges = tuple(range(len(g.edges)))
    else:
        _check_selection(g, selection)
        sel_rects, sel_edges = selection.rects, selection.edges

    out_edge: dict[tuple[int, int], Edge] = {}
    covered_in: set[tuple[int, int]] = set()
    for idx in sel_edges:
        e = g.edges[idx]
        out_edge[(e.src, e.color)] = e
        covered_in.add((e.dst, e.color))

    def succ(v: Vertex) -> Vertex | None:
        r, j, side = v
        if side == 0:
            return (r, pairing[r][j], 1)
        e = out_edge.get((r, j))
        if e is None:
            return None
        return (e.dst, e.color, 0)

    visited: set[Vertex] = set()
    paths: list[tuple[Vertex, ...]] = []
    for r in sel_rects:
        for j in range(g.k):
            v: Vertex | None = (r, j, 0)
            if (r, j) in covered_in:
                continue
            walk: list[Vertex] = []
            while v is not None and v not in visited:
                visited.add(v)
                walk.append(v)
                v = succ(v)
            paths.append(tuple(walk))

    cycles: list[tuple[Vertex, ...]] = []
    backward: list[int] = []
    yellow: list[int] = []
    for r in sel_rects:
        for j in range(g.k):
            for side in (0, 1):
                start: Vertex = (r, j, side)
                if start in visited:
                    continue
                walk = [start]
                visited.add(start)
                nb = ny = 0
                v2 = start
                while True:
                    r2, j2, side2 = v2
                    if side2 == 1:
                        e = out_edge[(r2, j2)]
                        if e.yellow:
                            ny += 1
                        elif g.is_backward(e):
                            nb += 1
                    nxt = succ(v2)
                    assert nxt is not None, "cycle walk fell off an open vertex"
                    if nxt == start:
                        break
                    visited.add(nxt)
                    walk.append(nxt)
                    v2 = nxt
                cycles.append(tuple(walk))
                backward.append(nb)
                yellow.append(ny)
    return CycleReport(tuple(cycles), tuple(paths), tuple(backward), tuple(yellow))


# ---------------------------------------------------------------------------
# selections

def _check_selection(g: TensorGraph, sel: Selection) -> None:
    rset = set(sel.rects)
    if len(rset) != len(sel.rects) or not all(0 <= r < g.n_rects for r in sel.rects):
        raise GraphError("selection rectangles must be unique positions in range")
    eset = set(sel.edges)
    if len(eset) != len(sel.edges) or not all(0 <= e < len(g.edges) for e in sel.edges):
        raise GraphError("selection edges must be unique indices in range")
    for idx in sel.edges:
        e = g.edges[idx]
        if e.src not in rset or e.dst not in rset:
            raise GraphError(f"selected edge {idx} touches an unselected rectangle")


def select(g: TensorGraph, rects: Sequence[int], edges: Sequence[int]) -> Selection:
    sel = Selection(tuple(sorted(rects)), tuple(sorted(edges)))
    _check_selection(g, sel)
    return sel


def full_selection(g: TensorGraph) -> Selection:
    return Selection(tuple(range(g.n_rects)), tuple(range(len(g.edges))))


def complement(g: TensorGraph, sel: Selection) -> Selection:
    """The removed rectangles and edges (not necessarily a valid selection)."""
    rects = tuple(sorted(set(range(g.n_rects)) - set(sel.rects)))
    edges = tuple(sorted(set(range(len(g.edges))) - set(sel.edges)))
    return Selection(rects, edges)


def is_simple(g: TensorGraph, selection: Selection | None = None) -> bool:
    """Whether no blue pairing of the selection closes a cycle.

    Decided by peeling: repeatedly delete any rectangle with no incoming or
    no outgoing selected edge (its edges go with it).  If everything peels
    away the walk structure is acyclic under every pairing; a remaining core
    where every rectangle has both an in- and an out-edge always admits a
    pairing that closes a cycle.
    """
    if selection is None:
        selection = full_selection(g)
    else:
        _check_selection(g, selection)
    alive = set(selection.rects)
    live_edges = set(selection.edges)
    in_deg = {r: 0 for r in alive}
    out_deg = {r: 0 for r in alive}
    touching: dict[int, list[int]] = {r: [] for r in alive}
    for idx in live_edges:
        e = g.edges[idx]
        in_deg[e.dst] += 1
        out_deg[e.src] += 1
        touching[e.src].append(idx)
        if e.dst != e.src:
            touching[e.dst].append(idx)
    queue = [r for r in alive if in_deg[r] == 0 or out_deg[r] == 0]
    while queue:
        r = queue.pop()
        if r not in alive:
            continue
        alive.remove(r)
        for idx in touching[r]:
            if idx not in live_edges:
                continue
            live_edges.remove(idx)
            e = g.edges[idx]
            for other, deg in ((e.dst, in_deg), (e.src, out_deg)):
                if other in alive:
                    deg[other] -= 1
                    if deg[other] == 0:
                        queue.append(other)
    return not alive


def brute_force_has_cycle(
    g: TensorGraph, selection: Selection | None = None, caps: Caps = DEFAULT_CAPS
) -> bool:
    """Check every blue pairing of the selection for a cycle (small inputs)."""
    if selection is None:
        selection = full_selection(g)
    else:
        _check_selection(g, selection)
    perms = _color_perms(g.k)
    total = len(perms) ** len(selection.rects)
    if total > caps.max_brute_cycles:
        raise ResourceCapError(
            f"brute-force cycle check needs {total} pairings, cap is {caps.max_brute_cycles}"
        )
    ident = perms[0]
    for combo in itertools.product(perms, repeat=len(selection.rects)):
        pairing = [ident] * g.n_rects
        for pos, entry in zip(selection.rects, combo):
            pairing[pos] = entry
        if count_cycles(g, tuple(pairing), selection).n_cycles > 0:
            return True
    return False


# ---------------------------------------------------------------------------
# rendering and serialization

_LEG_COLORS = {0: "green", 1: "red"}


def _edge_style(g: TensorGraph, e: Edge) -> str:
    if e.yellow:
        return 'color=gold, style=dashed, label="y"'
    color = _LEG_COLORS.get(e.color, "gray")
    if e.color >= 2:
        return f'color={color}, label="c{e.color + 1}"'
    return f"color={color}"


def to_dot(g: TensorGraph, pairing: Pairing | None = None) -> str:
    """Graphviz source for the graph, byte-deterministic per input.

    Leg 1 is green, leg 2 red, higher legs gray with a ``c<j>`` label;
    yellow edges are gold.  Open vertices are drawn as point stubs.  With a
    pairing, blue dotted self-loops labelled ``in>out`` (1-based colors)
    record the chosen color permutation at each rectangle.
    """
    if pairing is not None:
        _check_pairing(g, pairing)
    lines = ["digraph trace_word {", "  rankdir=LR;", "  node [shape=box];"]
    for pos in range(g.n_rects):
        lines.append(f'  r{pos} [label="{g.rect_label(pos)}"];')
    for pos in range(g.n_rects):
        for j in sorted(g.open_in[pos]):
            lines.append(f"  in_{pos}_{j + 1} [shape=point];")
            lines.append(f"  in_{pos}_{j + 1} -> r{pos} [{_edge_style(g, Edge(pos, pos, j))}, style=dotted];")
        for j in sorted(g.open_out[pos]):
            lines.append(f"  out_{pos}_{j + 1} [shape=point];")
            lines.append(f"  r{pos} -> out_{pos}_{j + 1} [{_edge_style(g, Edge(pos, pos, j))}, style=dotted];")
    for e in g.edges:
        lines.append(f"  r{e.src} -> r{e.dst} [{_edge_style(g, e)}];")
    if pairing is not None:
        for pos, entry in enumerate(pairing):
            for j, v in enumerate(entry):
                lines.append(
                    f'  r{pos} -> r{pos} [color=blue, style=dotted, label="{j + 1}>{v + 1}"];'
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(g: TensorGraph) -> str:
    data = {
        "k": g.k,
        "n_blocks": g.n_blocks,
        "rects": [g.rect_label(pos) for pos in range(g.n_rects)],
        "edges": [[e.src + 1, e.dst + 1, e.color + 1, e.kind] for e in g.edges],
        "open_in": [[r + 1, j + 1] for r in range(g.n_rects) for j in sorted(g.open_in[r])],
        "open_out": [[r + 1, j + 1] for r in range(g.n_rects) for j in sorted(g.open_out[r])],
    }
    return json.dumps(data, sort_keys=True)


_LABEL_RE = re.compile(r"^A(\d+)(\*)?(?:@(\d+))?$")


def from_json(text: str) -> TensorGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"bad JSON: {exc}") from exc
    try:
        k = int(data["k"])
        n_blocks = int(data.get("n_blocks", 1))
        labels = list(data["rects"])
        raw_edges = list(data["edges"])
        raw_in = list(data.get("open_in", []))
        raw_out = list(data.get("open_out", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"missing or malformed field: {exc}") from exc
    rects = []
    for label in labels:
        mt = _LABEL_RE.match(str(label))
        if not mt:
            raise GraphError(f"bad rectangle label {label!r}")
        index, star, copy = int(mt.group(1)), bool(mt.group(2)), mt.group(3)
        block = 0
        if copy is not None:
            block = (int(copy) - 1) * 2 + (1 if star else 0)
        rects.append(Rect(index, star=star, block=block))
    n = len(rects)
    edges = []
    for entry in raw_edges:
        if not (isinstance(entry, list) and len(entry) == 4):
            raise GraphError(f"bad edge entry {entry!r}")
        src, dst, color, kind = entry
        if kind not in ("plain", "yellow"):
            raise GraphError(f"bad edge kind {kind!r}")
        if not (1 <= src <= n and 1 <= dst <= n and 1 <= color <= k):
            raise GraphError(f"edge {entry!r} out of range")
        edges.append(Edge(src - 1, dst - 1, color - 1, yellow=(kind == "yellow")))
    open_in = [set() for _ in range(n)]
    open_out = [set() for _ in range(n)]
    for raw, sets in ((raw_in, open_in), (raw_out, open_out)):
        for entry in raw:
            if not (isinstance(entry, list) and len(entry) == 2):
                raise GraphError(f"bad open-vertex entry {entry!r}")
            r, j = entry
            if not (1 <= r <= n and 1 <= j <= k):
                raise GraphError(f"open vertex {entry!r} out of range")
            sets[r - 1].add(j - 1)
    g = TensorGraph(
        k,
        tuple(rects),
        tuple(edges),
        tuple(frozenset(s) for s in open_in),
        tuple(frozenset(s) for s in open_out),
        n_blocks=n_blocks,
    )
    _validate(g)
    return g
