"""Resource caps, numeric tolerances, and shared error types.

Every potentially expensive operation in the package checks its work against
a :class:`Caps` instance before (or while) doing it.  The defaults are sized
so that interactive use stays in the sub-second range; callers that know what
they are doing can pass a larger budget explicitly, and the command line
honours the ``TTE_CAPS`` environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


class InputError(ValueError):
    """Malformed user input: text, JSON, or inconsistent arguments."""


class ResourceCapError(RuntimeError):
    """A configured resource cap would be (or was) exceeded."""


class VerificationError(AssertionError):
    """A cross-check that should hold mathematically failed numerically."""


@dataclass(frozen=True)
class Caps:
    """Resource budget for searches and dense contractions.

    Attributes
    ----------
    max_pairings:
        Budget for pairing evaluations in extremal searches.  Pruned search
        counts every node it expands against this budget; plain enumeration
        refuses up front when the full space is larger.
    max_terms:
        Largest number of terms (``N ** labels``) a dense contraction may
        enumerate.
    max_dim:
        Largest per-rectangle matrix dimension ``N ** k``.
    max_n:
        Largest base dimension ``N`` accepted by dense evaluation.
    max_km:
        Soft size guard ``k * m`` for dense evaluation of a whole word.
    max_conjugate_m:
        Largest ``m`` for exhaustive relabeling search.
    max_theta_m:
        Largest word length for pairing enumeration in the Ginibre model.
    max_interval_m:
        Largest ``m`` for the exhaustive interval-merge minimum.
    max_brute_cycles:
        Budget for brute-force cycle detection over all pairings.
    dense_svd_dim:
        Matrices up to this dimension get an exact SVD for operator norms;
        larger ones use power iteration.
    power_iter_tol:
        Relative tolerance on the power-iteration Rayleigh quotient.
    power_iter_cap:
        Iteration cap for power iteration.
    """

    max_pairings: int = 10_000_000
    max_terms: int = 100_000_000
    max_dim: int = 4096
    max_n: int = 4
    max_km: int = 12
    max_conjugate_m: int = 8
    max_theta_m: int = 8
    max_interval_m: int = 6
    max_brute_cycles: int = 1_000_000
    dense_svd_dim: int = 512
    power_iter_tol: float = 1e-10
    power_iter_cap: int = 10_000


DEFAULT_CAPS = Caps()

#: Relative tolerance for identities that hold exactly in exact arithmetic.
REL_TOL = 1e-9

#: Max-norm tolerance for unitarity checks.
UNITARY_TOL = 1e-12

#: Additive margin when comparing sampled values against a supremum.
SAMPLE_MARGIN = 1e-6

#: Number of standard errors allowed between Monte Carlo and exact values.
MC_NSIGMA = 4.0

_ENV_FIELDS = {
    "pairings": "max_pairings",
    "terms": "max_terms",
    "dim": "max_dim",
    "n": "max_n",
    "km": "max_km",
    "conjugate_m": "max_conjugate_m",
    "theta_m": "max_theta_m",
    "interval_m": "max_interval_m",
    "brute_cycles": "max_brute_cycles",
    "svd_dim": "dense_svd_dim",
    "power_iter_cap": "power_iter_cap",
}


def caps_from_env(base: Caps = DEFAULT_CAPS, env: os._Environ | dict | None = None) -> Caps:
    """Apply overrides from ``TTE_CAPS`` (``pairings=...,terms=...,dim=...``).

    Unknown keys and malformed entries raise :class:`InputError` so typos do
    not silently run with default budgets.
    """
    if env is None:
        env = os.environ
    raw = env.get("TTE_CAPS", "").strip()
    if not raw:
        return base
    overrides: dict[str, int] = {}
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in _ENV_FIELDS:
            raise InputError(f"TTE_CAPS: unknown entry {item!r}")
        try:
            overrides[_ENV_FIELDS[key]] = int(value.strip())
        except ValueError as exc:
            raise InputError(f"TTE_CAPS: bad integer in {item!r}") from exc
    return replace(base, **overrides)
