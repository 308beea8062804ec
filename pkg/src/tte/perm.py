"""Permutations and partial permutations on ``{1, ..., m}``.

Points are 1-based throughout.  A :class:`PartialPermutation` is an injective
map defined on a subset of ``{1, ..., m}``; a :class:`Permutation` is the
everywhere-defined special case.  Both are immutable and hashable so they can
key caches and live inside frozen dataclasses.

Two text forms are accepted by :func:`parse`:

* cycle notation for full permutations, ``"(1 2 3)(4)"``, where omitted
  points are fixed;
* arc lists for partial maps, ``"1>2, 2>3"``, listing ``source>target``
  pairs.

The *backward count* of a map is the number of arcs ``i -> p(i)`` with
``p(i) <= i``; it measures how often the map steps against the natural order
of positions and upper-bounds several cycle statistics computed elsewhere in
the package.
"""

from __future__ import annotations

import itertools
import json
import re
from functools import lru_cache
from typing import Sequence

from .config import InputError, ResourceCapError

__all__ = [
    "PermError",
    "PartialPermutation",
    "Permutation",
    "parse",
    "identity",
    "full_cycle",
    "min_conjugate_backward",
    "interval_merge_count",
    "interval_merge_min",
    "to_json",
    "from_json",
]


class PermError(InputError):
    """Malformed or inconsistent permutation data."""


class PartialPermutation:
    """An injective map from a subset of ``{1, ..., m}`` into ``{1, ..., m}``.

    Internally the image is stored as a tuple indexed by ``i - 1`` with
    ``None`` marking undefined points.

    >>> p = PartialPermutation(3, (2, None, 1))
    >>> p(1), p(2), p(3)
    (2, None, 1)
    >>> sorted(p.domain), sorted(p.image)
    ([1, 3], [1, 2])
    >>> p.backward_count()
    1
    """

    __slots__ = ("m", "_img")

    def __init__(self, m: int, images: Sequence[int | None]):
        if m < 0:
            raise PermError(f"size must be non-negative, got {m}")
        img = tuple(images)
        if len(img) != m:
            raise PermError(f"expected {m} image entries, got {len(img)}")
        seen: set[int] = set()
        for i, v in enumerate(img, start=1):
            if v is None:
                continue
            if not isinstance(v, int) or not 1 <= v <= m:
                raise PermError(f"image of {i} is {v!r}, outside 1..{m}")
            if v in seen:
                raise PermError(f"value {v} is hit twice; map must be injective")
            seen.add(v)
        self.m = m
        self._img = img

    @property
    def images(self) -> tuple[int | None, ...]:
        return self._img

    def __call__(self, i: int) -> int | None:
        if not 1 <= i <= self.m:
            raise PermError(f"point {i} outside 1..{self.m}")
        return self._img[i - 1]

    def defined(self, i: int) -> bool:
        return self(i) is not None

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self._img, start=1) if v is not None)

    @property
    def image(self) -> frozenset[int]:
        return frozenset(v for v in self._img if v is not None)

    @property
    def is_full(self) -> bool:
        return None not in self._img

    def arcs(self) -> tuple[tuple[int, int], ...]:
        """All ``(i, p(i))`` pairs in ascending order of ``i``."""
        return tuple((i, v) for i, v in enumerate(self._img, start=1) if v is not None)

    def invert(self) -> "PartialPermutation":
        """The inverse map, defined on the image.

        >>> PartialPermutation(3, (2, None, 1)).invert().images
        (3, 1, None)
        """
        img: list[int | None] = [None] * self.m
        for i, v in self.arcs():
            img[v - 1] = i
        return type(self)(self.m, img)

    def backward_count(self) -> int:
        """Number of arcs with ``p(i) <= i`` (fixed points included)."""
        return sum(1 for i, v in self.arcs() if v <= i)

    def conjugate(self, theta: "Permutation") -> "PartialPermutation":
        """Relabel points by ``theta``: the map ``theta . p . theta^-1``.

        The result sends ``theta(i) -> theta(p(i))`` for each arc of ``p``,
        so cycle structure is preserved while the backward count generally
        changes.
        """
        if not isinstance(theta, Permutation):
            raise PermError("relabeling must be a full permutation")
        if theta.m != self.m:
            raise PermError(f"size mismatch: {self.m} vs {theta.m}")
        img: list[int | None] = [None] * self.m
        for i, v in self.arcs():
            img[theta(i) - 1] = theta(v)
        return type(self)(self.m, img)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialPermutation):
            return NotImplemented
        return self.m == other.m and self._img == other._img

    def __hash__(self) -> int:
        return hash((self.m, self._img))

    def __repr__(self) -> str:
        body = ",".join(f"{i}>{v}" for i, v in self.arcs())
        return f"{type(self).__name__}({self.m}, '{body}')"


class Permutation(PartialPermutation):
    """An everywhere-defined :class:`PartialPermutation`.

    >>> g = Permutation(4, (2, 3, 4, 1))
    >>> g.cycles()
    ((1, 2, 3, 4),)
    >>> g.backward_count()
    1
    """

    def __init__(self, m: int, images: Sequence[int | None]):
        super().__init__(m, images)
        if not self.is_full:
            raise PermError("a Permutation must be defined everywhere")

    def __call__(self, i: int) -> int:
        v = super().__call__(i)
        assert v is not None
        return v

    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """Cycle decomposition, fixed points included.

        Each cycle starts at its minimal element; cycles are sorted by that
        element, so the output is canonical.

        >>> Permutation(6, (6, 4, 2, 5, 3, 1)).cycles()
        ((1, 6), (2, 4, 5, 3))
        """
        seen = [False] * self.m
        out: list[tuple[int, ...]] = []
        for start in range(1, self.m + 1):
            if seen[start - 1]:
                continue
            cyc = [start]
            seen[start - 1] = True
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen[nxt - 1] = True
                nxt = self(nxt)
            out.append(tuple(cyc))
        return tuple(out)

    def n_cycles(self) -> int:
        return len(self.cycles())

    def invert(self) -> "Permutation":
        inv = super().invert()
        assert isinstance(inv, Permutation)
        return inv


def identity(m: int) -> Permutation:
    return Permutation(m, tuple(range(1, m + 1)))


def full_cycle(m: int) -> Permutation:
    """The increasing cycle ``1 -> 2 -> ... -> m -> 1``.

    Its backward count is 1 (only the wrap-around arc steps backward).
    """
    if m < 1:
        raise PermError("full cycle needs m >= 1")
    return Permutation(m, tuple(range(2, m + 1)) + (1,))


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def _parse_cycles(text: str, m: int) -> Permutation:
    leftover = _CYCLE_RE.sub("", text)
    if leftover.strip():
        raise PermError(f"stray text {leftover.strip()!r} in cycle notation")
    img: list[int | None] = [None] * m
    seen: set[int] = set()
    for group in _CYCLE_RE.findall(text):
        elems: list[int] = []
        for tok in re.split(r"[,\s]+", group.strip()):
            if not tok:
                continue
            try:
                e = int(tok)
            except ValueError as exc:
                raise PermError(f"bad element {tok!r} in cycle notation") from exc
            if not 1 <= e <= m:
                raise PermError(f"element {e} outside 1..{m}")
            if e in seen:
                raise PermError(f"element {e} repeated across cycles")
            seen.add(e)
            elems.append(e)
        for a, b in zip(elems, elems[1:] + elems[:1]):
            img[a - 1] = b
    for i in range(m):
        if img[i] is None:
            img[i] = i + 1  # omitted points are fixed
    return Permutation(m, img)


def _parse_arcs(text: str, m: int) -> PartialPermutation:
    img: list[int | None] = [None] * m
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(">")
        if len(parts) != 2:
            raise PermError(f"bad arc {item!r}, expected 'source>target'")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise PermError(f"bad arc {item!r}, expected integers") from exc
        if not (1 <= a <= m and 1 <= b <= m):
            raise PermError(f"arc {item!r} leaves 1..{m}")
        if img[a - 1] is not None:
            raise PermError(f"source {a} listed twice")
        img[a - 1] = b
    # injectivity is re-checked by the constructor
    p = PartialPermutation(m, img)
    if p.is_full:
        return Permutation(m, img)
    return p


def parse(text: str, m: int) -> PartialPermutation:
    """Parse cycle notation or an arc list into a map on ``{1, ..., m}``.

    Cycle notation always yields a full :class:`Permutation`; arc lists
    yield a :class:`PartialPermutation` (upgraded to :class:`Permutation`
    when every point has an arc).  The empty string and ``"-"`` denote the
    nowhere-defined map; ``"id"`` denotes the identity.

    >>> parse("(1 2 3)(4)", 4).images
    (2, 3, 1, 4)
    >>> parse("1>2, 2>3", 3).images
    (2, 3, None)
    >>> parse("1>2, 3>2", 3)
    Traceback (most recent call last):
        ...
    tte.perm.PermError: value 2 is hit twice; map must be injective
    """
    if m < 0:
        raise PermError(f"size must be non-negative, got {m}")
    text = text.strip()
    if text in ("", "-"):
        return PartialPermutation(m, (None,) * m)
    if text == "id":
        return identity(m)
    if "(" in text or ")" in text:
        return _parse_cycles(text, m)
    if ">" in text:
        return _parse_arcs(text, m)
    raise PermError(f"cannot parse {text!r}: use cycles '(1 2)' or arcs '1>2'")


def to_json(p: PartialPermutation) -> str:
    """Serialize as ``{"m": ..., "arcs": [[i, p(i)], ...]}``."""
    return json.dumps({"m": p.m, "arcs": [list(a) for a in p.arcs()]})


def from_json(text: str) -> PartialPermutation:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PermError(f"bad JSON: {exc}") from exc
    if not isinstance(data, dict) or "m" not in data or "arcs" not in data:
        raise PermError("expected an object with 'm' and 'arcs'")
    m = data["m"]
    if not isinstance(m, int):
        raise PermError("'m' must be an integer")
    img: list[int | None] = [None] * m
    for arc in data["arcs"]:
        if not (isinstance(arc, (list, tuple)) and len(arc) == 2):
            raise PermError(f"bad arc entry {arc!r}")
        a, b = arc
        if not (isinstance(a, int) and isinstance(b, int) and 1 <= a <= m and 1 <= b <= m):
            raise PermError(f"arc {arc!r} leaves 1..{m}")
        if img[a - 1] is not None:
            raise PermError(f"source {a} listed twice")
        img[a - 1] = b
    p = PartialPermutation(m, img)
    if p.is_full:
        return Permutation(m, img)
    return p


def min_conjugate_backward(
    ps: Sequence[PartialPermutation], max_m: int = 8
) -> tuple[Permutation, int]:
    """Relabeling that minimizes the total backward count of ``ps``.

    Tries every full permutation ``theta`` of the common ground set and
    returns ``(theta, total)`` where ``total`` is the minimal value of
    ``sum(p.conjugate(theta).backward_count() for p in ps)``.  Among optimal
    relabelings the lexicographically smallest image tuple wins.  Exhaustive,
    so refuses ``m > max_m``.
    """
    if not ps:
        raise PermError("need at least one map")
    m = ps[0].m
    if any(p.m != m for p in ps):
        raise PermError("all maps must share the same size")
    if m > max_m:
        raise ResourceCapError(f"exhaustive relabeling capped at m <= {max_m}, got {m}")
    best_theta: Permutation | None = None
    best_total = -1
    for images in itertools.permutations(range(1, m + 1)):
        theta = Permutation(m, images)
        total = sum(p.conjugate(theta).backward_count() for p in ps)
        if best_theta is None or total < best_total:
            best_theta, best_total = theta, total
    assert best_theta is not None
    return best_theta, best_total


def _backward_intervals(p: PartialPermutation) -> list[frozenset[int]]:
    """The sets ``(p(i), i]`` for arcs with ``p(i) < i`` and ``i < m``."""
    out = []
    for i, v in p.arcs():
        if i < p.m and v < i:
            out.append(frozenset(range(v + 1, i + 1)))
    return out


def interval_merge_count(p: PartialPermutation) -> int:
    """Greedily merge the backward intervals of ``p``; count what remains.

    Each strictly backward arc ``i -> p(i)`` with ``i < m`` contributes the
    interval ``(p(i), i]``.  Scanning in ascending order of left endpoint,
    any two disjoint sets are replaced by their union until every pair
    intersects; the result is the number of sets left.  The identity gives 0
    (no backward intervals at all).

    The greedy merge order can matter; see :func:`interval_merge_min` for
    the exhaustive minimum on small inputs.
    """
    work = sorted(_backward_intervals(p), key=lambda s: (min(s), max(s)))
    merged = True
    while merged:
        merged = False
        for a in range(len(work)):
            for b in range(a + 1, len(work)):
                if not work[a] & work[b]:
                    union = work[a] | work[b]
                    del work[b]
                    del work[a]
                    work.append(union)
                    work.sort(key=lambda s: (min(s), max(s)))
                    merged = True
                    break
            if merged:
                break
    return len(work)


def interval_merge_min(p: PartialPermutation, max_m: int = 6) -> int:
    """Minimum over all merge orders of the count in :func:`interval_merge_count`.

    Exhaustive over merge sequences (memoized on the multiset of current
    sets), so refuses ``m > max_m``.
    """
    if p.m > max_m:
        raise ResourceCapError(f"exhaustive merge search capped at m <= {max_m}, got {p.m}")
    start = frozenset(_backward_intervals(p))

    @lru_cache(maxsize=None)
    def rec(state: frozenset[frozenset[int]]) -> int:
        items = sorted(state, key=lambda s: (min(s), max(s)))
        best = None
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                if not items[i] & items[j]:
                    nxt = (state - {items[i], items[j]}) | {items[i] | items[j]}
                    cand = rec(frozenset(nxt))
                    if best is None or cand < best:
                        best = cand
        return len(items) if best is None else best

    return rec(start)
