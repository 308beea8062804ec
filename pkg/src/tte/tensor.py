"""Dense numerical evaluation of multi-leg partial-trace words.

A word on ``m`` matrices with ``k`` legs assigns one index label per plain
edge of its graph; every matrix becomes a ``2k``-axis tensor (``k`` row
axes, ``k`` column axes, one per leg) and the word's value is the direct
sum over all labels of the entry products.  Undefined leg points leave
labels uncontracted: those become the row and column axes of the result,
ordered leg-major and then by rectangle, matching the graph module's
open-vertex bookkeeping.

Everything here works entrywise and deliberately avoids contraction-order
planning (``optimize=False``): evaluation cost is transparent and bounded
by the configured term cap, and the numbers are reproducible to the last
bit for a fixed NumPy version.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import json

import numpy as np

from .config import (
    Caps,
    DEFAULT_CAPS,
    InputError,
    ResourceCapError,
    UNITARY_TOL,
)
from .graph import Selection, TensorGraph, _check_selection
from .perm import PartialPermutation, Permutation

__all__ = [
    "TensorError",
    "EvalResult",
    "OpNormResult",
    "make_u_pi",
    "evaluate",
    "adjoint_consistency",
    "moment_trace",
    "operator_norm",
    "evaluate_partial_graph",
    "random_unitary",
    "is_unitary",
    "matrix_to_json",
    "matrix_from_json",
]


class TensorError(InputError):
    """Inconsistent matrix data for a dense evaluation."""


@dataclass(frozen=True)
class EvalResult:
    """Evaluated word: a matrix indexed by the open leg points.

    ``row_slots`` and ``col_slots`` list the uncontracted in- and out-slots
    as ``(leg, rectangle)`` pairs (1-based), leg-major; ``value`` has shape
    ``(n ** len(row_slots), n ** len(col_slots))``.  Fully contracted words
    give a 1x1 matrix, exposed through :attr:`scalar`.
    """

    value: np.ndarray
    row_slots: tuple[tuple[int, int], ...]
    col_slots: tuple[tuple[int, int], ...]
    n: int

    @property
    def scalar(self) -> complex:
        if self.value.shape != (1, 1):
            raise TensorError(f"value has shape {self.value.shape}, not a scalar")
        return complex(self.value[0, 0])


def _as_images(pi: Permutation | Sequence[int], k: int | None = None) -> tuple[int, ...]:
    """Normalize a leg permutation to 0-based image tuple form."""
    if isinstance(pi, Permutation):
        images = tuple(v - 1 for v in pi.images)
    else:
        images = tuple(int(v) for v in pi)
    kk = len(images) if k is None else k
    if sorted(images) != list(range(kk)):
        raise TensorError(f"{pi!r} is not a permutation of {kk} legs")
    return images


def make_u_pi(pi: Permutation | Sequence[int], n: int, caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """The permutation operator mixing ``k`` tensor legs of dimension ``n``.

    Entry ``(r, c)`` is 1 when the base-``n`` digits (leg 1 most
    significant) satisfy ``c[j] = r[pi(j)]`` for every leg ``j``.  For one
    leg this is the identity; for two legs and ``pi`` the transposition it
    is the swap operator.  These operators are unitary, and words evaluated
    on them attain the graph-theoretic cycle bound exactly.
    """
    images = _as_images(pi)
    k = len(images)
    if n < 1:
        raise TensorError(f"base dimension must be >= 1, got {n}")
    dim = n**k
    if dim > caps.max_dim:
        raise ResourceCapError(f"operator dimension {dim} exceeds cap {caps.max_dim}")
    u = np.zeros((dim, dim), dtype=np.complex128)
    for row in range(dim):
        digits = []
        rem = row
        for _ in range(k):
            rem, d = divmod(rem, n)
            digits.append(d)
        digits.reverse()  # digits[j] = row index of leg j
        col = 0
        for j in range(k):
            col = col * n + digits[images[j]]
        u[row, col] = 1.0
    return u


def _check_word(
    sigmas: Sequence[PartialPermutation], mats: Sequence[np.ndarray], n: int, caps: Caps
) -> tuple[int, int]:
    if not sigmas:
        raise TensorError("need at least one leg")
    m = sigmas[0].m
    k = len(sigmas)
    if any(s.m != m for s in sigmas):
        raise TensorError("all legs must act on the same number of points")
    if len(mats) != m:
        raise TensorError(f"expected {m} matrices, got {len(mats)}")
    if n < 1:
        raise TensorError(f"base dimension must be >= 1, got {n}")
    if n > caps.max_n:
        raise ResourceCapError(f"base dimension {n} exceeds cap {caps.max_n}")
    if k * m > caps.max_km:
        raise ResourceCapError(f"word size k*m = {k * m} exceeds cap {caps.max_km}")
    dim = n**k
    if dim > caps.max_dim:
        raise ResourceCapError(f"operator dimension {dim} exceeds cap {caps.max_dim}")
    for t, a in enumerate(mats):
        a = np.asarray(a)
        if a.shape != (dim, dim):
            raise TensorError(
                f"matrix {t + 1} has shape {a.shape}, expected {(dim, dim)}"
            )
    return m, k


def evaluate(
    sigmas: Sequence[PartialPermutation],
    mats: Sequence[np.ndarray],
    n: int,
    caps: Caps = DEFAULT_CAPS,
) -> EvalResult:
    """Evaluate the word by direct index enumeration.

    Each arc ``i -> sigma_j(i)`` identifies the column label of leg ``j`` at
    matrix ``i`` with the row label of leg ``j`` at matrix ``sigma_j(i)``;
    identified labels are summed over, the rest stay open.  The sum runs
    over ``n ** labels`` terms, which must fit ``caps.max_terms``.
    """
    m, k = _check_word(sigmas, mats, n, caps)
    next_label = 0
    edge_label: dict[tuple[int, int], int] = {}
    for j, s in enumerate(sigmas):
        for i, _ in s.arcs():
            edge_label[(j, i)] = next_label
            next_label += 1
    row_label = [[-1] * k for _ in range(m)]
    col_label = [[-1] * k for _ in range(m)]
    row_slots: list[tuple[int, int]] = []
    col_slots: list[tuple[int, int]] = []
    open_row: list[int] = []
    open_col: list[int] = []
    for j, s in enumerate(sigmas):
        inv = s.invert()
        for t in range(1, m + 1):
            src = inv(t)
            if src is not None:
                row_label[t - 1][j] = edge_label[(j, src)]
    for j, s in enumerate(sigmas):
        for t in range(1, m + 1):
            v = s(t)
            if v is not None:
                col_label[t - 1][j] = edge_label[(j, t)]
    for j in range(k):
        for t in range(m):
            if row_label[t][j] < 0:
                row_label[t][j] = next_label
                open_row.append(next_label)
                row_slots.append((j + 1, t + 1))
                next_label += 1
    for j in range(k):
        for t in range(m):
            if col_label[t][j] < 0:
                col_label[t][j] = next_label
                open_col.append(next_label)
                col_slots.append((j + 1, t + 1))
                next_label += 1
    terms = n**next_label
    if terms > caps.max_terms:
        raise ResourceCapError(f"contraction needs {terms} terms, cap is {caps.max_terms}")
    args: list = []
    for t in range(m):
        tensor = np.asarray(mats[t], dtype=np.complex128).reshape((n,) * (2 * k))
        args.append(tensor)
        args.append(row_label[t] + col_label[t])
    args.append(open_row + open_col)
    arr = np.einsum(*args, optimize=False)
    value = np.asarray(arr, dtype=np.complex128).reshape(
        n ** len(open_row), n ** len(open_col)
    )
    return EvalResult(value, tuple(row_slots), tuple(col_slots), n)


def adjoint_consistency(
    sigmas: Sequence[PartialPermutation],
    mats: Sequence[np.ndarray],
    n: int,
    caps: Caps = DEFAULT_CAPS,
) -> float:
    """Max-norm gap between the adjoint word and the conjugate transpose.

    Evaluating with every leg inverted and every matrix conjugate-transposed
    (kept at its own slot) must reproduce the conjugate transpose of the
    original value; the return is the largest entrywise deviation, which
    should vanish to rounding.
    """
    y = evaluate(sigmas, mats, n, caps)
    z = evaluate(
        [s.invert() for s in sigmas],
        [np.asarray(a).conj().T for a in mats],
        n,
        caps,
    )
    if z.value.shape != (y.value.shape[1], y.value.shape[0]):
        raise TensorError("adjoint evaluation produced mismatched shape")
    return float(np.max(np.abs(z.value - y.value.conj().T)))


def moment_trace(y: np.ndarray, p: int) -> float:
    """``trace((Y Y*)**p)`` for a dense rectangle ``Y`` (a real number)."""
    if p < 1:
        raise TensorError(f"moment order must be >= 1, got {p}")
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2:
        raise TensorError("moment trace needs a 2-D array")
    b = y @ y.conj().T
    t = complex(np.trace(np.linalg.matrix_power(b, p)))
    scale = max(1.0, abs(t.real))
    if abs(t.imag) > 1e-9 * scale:
        raise TensorError(f"moment trace has spurious imaginary part {t.imag}")
    return float(t.real)


@dataclass(frozen=True)
class OpNormResult:
    """Operator norm with a certified enclosure ``[lower, upper]``.

    Small matrices are resolved by a full SVD (``lower == upper``).  Larger
    ones use power iteration on the Gram matrix: the Rayleigh quotient is a
    certified lower bound, the enclosing upper bound comes from norm
    inequalities, and ``converged`` reports whether the quotient settled to
    the configured tolerance within the iteration cap.  Non-convergence is
    reported, never hidden.
    """

    value: float
    lower: float
    upper: float
    method: str
    iterations: int
    converged: bool


def operator_norm(y: np.ndarray, caps: Caps = DEFAULT_CAPS, seed: int = 0) -> OpNormResult:
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2:
        raise TensorError("operator norm needs a 2-D array")
    if min(y.shape) == 0:
        return OpNormResult(0.0, 0.0, 0.0, "svd", 0, True)
    if max(y.shape) <= caps.dense_svd_dim:
        s = float(np.linalg.svd(y, compute_uv=False)[0])
        return OpNormResult(s, s, s, "svd", 0, True)
    b = y.conj().T @ y if y.shape[1] <= y.shape[0] else y @ y.conj().T
    d = b.shape[0]
    # certified upper bounds on the top eigenvalue of the Gram matrix
    frob = float(np.sqrt(np.real(np.sum(b * b.conj()))))
    gersh = float(np.max(np.sum(np.abs(b), axis=1)))
    upper_eig = min(frob, gersh)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    lam = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, caps.power_iter_cap + 1):
        w = b @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            lam = 0.0
            converged = True
            break
        v = w / nw
        lam = float(np.real(np.vdot(v, b @ v)))
        if iterations > 1 and abs(lam - lam_prev) <= caps.power_iter_tol * max(lam, 1e-300):
            converged = True
            break
        lam_prev = lam
    lower = float(np.sqrt(max(lam, 0.0)))
    upper = float(np.sqrt(max(upper_eig, lam, 0.0)))
    return OpNormResult(lower, lower, upper, "power", iterations, converged)


def evaluate_partial_graph(
    g: TensorGraph,
    selection: Selection,
    mats: Sequence[np.ndarray],
    n: int,
    caps: Caps = DEFAULT_CAPS,
) -> tuple[np.ndarray, float]:
    """Contract only the selected edges of a graph; free slots stay open.

    ``mats`` is indexed by rectangle position (unselected entries are
    ignored).  Returns the resulting tensor, with one axis per free slot
    (selected in-slots leg-major by rectangle, then out-slots likewise),
    and its squared Frobenius norm.  On a selection where no pairing closes
    a cycle and with unitary inputs, the squared norm is exactly
    ``n ** (k * rects - edges)``.
    """
    _check_selection(g, selection)
    if len(mats) != g.n_rects:
        raise TensorError(f"expected {g.n_rects} matrices, got {len(mats)}")
    if n < 1:
        raise TensorError(f"base dimension must be >= 1, got {n}")
    dim = n**g.k
    if dim > caps.max_dim:
        raise ResourceCapError(f"operator dimension {dim} exceeds cap {caps.max_dim}")
    if not selection.rects:
        return np.ones((), dtype=np.complex128), 1.0
    k = g.k
    row_label = {r: [-1] * k for r in selection.rects}
    col_label = {r: [-1] * k for r in selection.rects}
    next_label = 0
    for idx in selection.edges:
        e = g.edges[idx]
        col_label[e.src][e.color] = next_label
        row_label[e.dst][e.color] = next_label
        next_label += 1
    out_labels: list[int] = []
    for j in range(k):
        for r in selection.rects:
            if row_label[r][j] < 0:
                row_label[r][j] = next_label
                out_labels.append(next_label)
                next_label += 1
    for j in range(k):
        for r in selection.rects:
            if col_label[r][j] < 0:
                col_label[r][j] = next_label
                out_labels.append(next_label)
                next_label += 1
    terms = n**next_label
    if terms > caps.max_terms:
        raise ResourceCapError(f"contraction needs {terms} terms, cap is {caps.max_terms}")
    args: list = []
    for r in selection.rects:
        a = np.asarray(mats[r], dtype=np.complex128)
        if a.shape != (dim, dim):
            raise TensorError(f"matrix {r + 1} has shape {a.shape}, expected {(dim, dim)}")
        args.append(a.reshape((n,) * (2 * k)))
        args.append(row_label[r] + col_label[r])
    args.append(out_labels)
    tensor = np.asarray(np.einsum(*args, optimize=False), dtype=np.complex128)
    frob_sq = float(np.sum(np.abs(tensor) ** 2))
    return tensor, frob_sq


def random_unitary(dim: int, seed: int | Sequence[int]) -> np.ndarray:
    """Seeded Haar-distributed unitary, byte-reproducible per (dim, seed).

    QR of a complex Gaussian matrix with the R-diagonal phase normalized
    away; unitarity is verified to max-norm 1e-12 before returning.  The
    seed may be an integer or a sequence of integers (a seed path).
    """
    if dim < 1:
        raise TensorError(f"dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    q = q * ph.conj()
    if not is_unitary(q, UNITARY_TOL):
        raise TensorError("QR produced a non-unitary matrix (numerical breakdown)")
    return q


def is_unitary(a: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    gap = np.abs(a.conj().T @ a - np.eye(a.shape[0]))
    return bool(np.max(gap) <= tol)


def matrix_to_json(a: np.ndarray) -> str:
    """Serialize a dense complex matrix as rows/cols plus re/im arrays."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise TensorError("matrix serialization needs a 2-D array")
    return json.dumps(
        {
            "rows": a.shape[0],
            "cols": a.shape[1],
            "re": a.real.tolist(),
            "im": a.imag.tolist(),
        },
        sort_keys=True,
    )


def matrix_from_json(text: str) -> np.ndarray:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorError(f"bad JSON: {exc}") from exc
    try:
        rows, cols = int(data["rows"]), int(data["cols"])
        re = np.asarray(data["re"], dtype=np.float64)
        im = np.asarray(data["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise TensorError(f"missing or malformed field: {exc}") from exc
    if re.shape != (rows, cols) or im.shape != (rows, cols):
        raise TensorError(
            f"matrix data has shape {re.shape}/{im.shape}, expected {(rows, cols)}"
        )
    return re + 1j * im
