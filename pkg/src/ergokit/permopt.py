"""Level-permutation optimization for DFT cyclic permutations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .cyclic import CyclicConfig, mode_fluctuations, persistence_amplitudes
from .errors import ParameterError
from .rng import make_rng
from .spectra import TWO_PI, Spectrum

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PermutationSearchResult:
    best_q: np.ndarray
    best_eps: float
    sorted_eps: float
    n_evaluated: int
    ties: int
    eps_table: np.ndarray | None = None


def sorting_permutation(s) -> np.ndarray:
    """Stable ascending-sort permutation of the levels (identity for a Spectrum)."""
    levels = s.levels if isinstance(s, Spectrum) else np.asarray(s, dtype=float)
    return np.argsort(levels, kind="stable")


def _eps_all(s: Spectrum, t0: float, p: int, perms: np.ndarray) -> np.ndarray:
    d = s.d
    n = np.arange(d)
    e = s.levels[perms]  # (P, d)
    ph = TWO_PI * np.mod(p * n, d) / d - p * t0 * e
    c = np.exp(1j * ph).mean(axis=1)
    return 1.0 - (c.real**2 + c.imag**2)


def exhaustive_optimal_q(s: Spectrum, t0: float, p: int = 1, d_max: int = 8, keep_table: bool = False) -> PermutationSearchResult:
    """Minimum of eps_C(p) over all d! level assignments, lexicographic order."""
    d = s.d
    if d > d_max:
        raise ParameterError(f"exhaustive search over {d}! permutations refused (d_max={d_max})")
    perms = np.array(list(permutations(range(d))), dtype=np.int64)
    eps = np.empty(len(perms))
    block = 5040
    for a in range(0, len(perms), block):
        eps[a : a + block] = _eps_all(s, t0, p, perms[a : a + block])
    i = int(np.argmin(eps))
    best = float(eps[i])
    q_sorted = sorting_permutation(s)
    sorted_eps = float(_eps_all(s, t0, p, q_sorted[None, :])[0])
    ties = int(np.sum(eps <= best + TIE_TOL))
    return PermutationSearchResult(perms[i].copy(), best, sorted_eps, len(perms), ties, eps if keep_table else None)


def _small_perm(d: int, rng: np.random.Generator, max_disp: int) -> np.ndarray:
    """Random permutation made of short cycles on nearby indices."""
    q = np.arange(d)
    i = 0
    while i < d:
        size = int(rng.integers(1, max_disp + 1))
        blk = np.arange(i, min(i + size, d))
        q[blk] = rng.permutation(blk)
        i += size
    return q


def small_permutation_variance_check(s: Spectrum, t0: float, trials: int, seed: int = 0, max_block: int | None = None) -> tuple[bool, float, np.ndarray | None]:
    """Check that no random small permutation lowers the mode variance.

    Mode fluctuations are shifted to sum to zero first. Permutations are
    built from random shuffles of contiguous blocks shorter than d/2, so
    every cycle satisfies |r(k) - r(j)| < d/2. Returns (ok, worst margin,
    worst permutation), margin = sum Delta'^2 - sum Delta^2.
    """
    d = s.d
    cfg = CyclicConfig(t0, sorting_permutation(s))
    base = mode_fluctuations(s, cfg)
    base = base - base.mean()
    ref = float(np.sum(base**2))
    e_sorted = s.levels[cfg.q]
    n = np.arange(d)
    scale = t0 * d / TWO_PI
    shift = scale * e_sorted.mean() - n.mean()
    mb = max_block or max(1, (d - 1) // 2)
    if not 1 <= mb < d / 2 + 1e-12 and d > 2:
        raise ParameterError("blocks must be shorter than d/2")
    rng = make_rng(seed)
    worst, worst_q = math.inf, None
    for _ in range(trials):
        q = _small_perm(d, rng, mb)
        dp = scale * e_sorted[q] - n - shift
        m = float(np.sum(dp**2)) - ref
        if m < worst:
            worst, worst_q = m, q
    if trials == 0:
        worst = 0.0
    return bool(worst >= -1e-9 * max(ref, 1.0)), float(worst), worst_q


@dataclass(frozen=True)
class VarianceReport:
    sigma2: float
    alpha: float
    beta: float | None


def variance_vs_targets(s: Spectrum, cfg: CyclicConfig) -> VarianceReport:
    """sigma^2 of the mode fluctuations and the matching alpha, beta = 4/alpha^2."""
    delta = mode_fluctuations(s, cfg)
    sig2 = float(np.var(delta))
    ld = math.log(s.d) if s.d > 1 else 0.0
    alpha = math.sqrt(4 * np.pi**2 * sig2 / ld) if ld > 0 else 0.0
    beta = 4 / alpha**2 if alpha > 0 else None
    return VarianceReport(sig2, alpha, beta)
