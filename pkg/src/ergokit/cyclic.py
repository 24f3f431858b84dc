"""DFT cyclic permutations: mode fluctuations, persistence, SFF and verdicts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammainc

from .errors import ParameterError
from .spectra import TWO_PI, Spectrum

# rows of the p x d phase matrix evaluated at once
_CHUNK_ELEMS = 1 << 21
DEFAULT_THRESHOLDS = (10.0, 10.0, 10.0)
LEVEL_CAP = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class CyclicConfig:
    """Step time t0 and level assignment q (the n-th basis slot gets level q[n])."""

    t0: float
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.int64).ravel()
        if not (self.t0 > 0 and math.isfinite(self.t0)):
            raise ParameterError(f"t0 must be positive and finite, got {self.t0!r}")
        if not np.array_equal(np.sort(q), np.arange(q.size)):
            raise ParameterError("q must be a permutation of 0..d-1")
        q.setflags(write=False)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "q", q)

    @classmethod
    def for_spectrum(cls, s: Spectrum, t0: float | None = None, q=None) -> "CyclicConfig":
        """Defaults: Heisenberg step time and the sorted assignment."""
        if t0 is None:
            t0 = heisenberg_t0(s)
        if q is None:
            q = np.argsort(s.levels, kind="stable")
        return cls(t0, q)

    def check(self, s: Spectrum) -> None:
        if self.q.size != s.d:
            raise ParameterError(f"permutation has length {self.q.size}, spectrum has d={s.d}")


@dataclass(frozen=True, eq=False)
class PersistenceSeries:
    p_values: np.ndarray
    z: np.ndarray
    eps: np.ndarray

    @property
    def z2(self) -> np.ndarray:
        return self.z**2

    def at(self, p: int) -> float:
        i = np.nonzero(self.p_values == p)[0]
        if i.size == 0:
            raise KeyError(p)
        return float(self.z[i[0]])


@dataclass
class ErgodicityReport:
    ergodic: bool
    aperiodic: bool
    quasiperiodic: bool
    t_R: int | None
    sigma2: float
    thresholds: tuple[float, float, float]
    bound_verdicts: dict
    d: int = 0
    t0: float = 0.0
    eps1: float = 0.0
    ergodic_margin: float = 0.0
    aperiodic_margin: float | None = None
    span: int = 0
    persistence_aperiodic: bool = False
    sff_margin: float | None = None
    recurrences: list = field(default_factory=list)
    series: PersistenceSeries | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("series")
        out["thresholds"] = {"c_e": self.thresholds[0], "c_a": self.thresholds[1], "c_r": self.thresholds[2]}
        return out


def heisenberg_t0(s: Spectrum) -> float:
    """2*pi*Omega/d with the uniform density Omega = (d-1)/(Emax-Emin)."""
    if s.d < 2:
        raise ParameterError("need d >= 2 for a density of states")
    span = float(s.levels[-1] - s.levels[0])
    if span <= 0:
        raise ParameterError("all levels degenerate; density of states undefined")
    omega = (s.d - 1) / span
    return TWO_PI * omega / s.d


def _ordered(s: Spectrum, cfg: CyclicConfig) -> np.ndarray:
    cfg.check(s)
    return s.levels[cfg.q]


def mode_fluctuations(s: Spectrum, cfg: CyclicConfig) -> np.ndarray:
    """Delta_n = (t0 d / 2pi) E_{q(n)} - n, no unfolding."""
    e = _ordered(s, cfg)
    d = s.d
    return cfg.t0 * d / TWO_PI * e - np.arange(d)


def _phase_sums(n_idx: np.ndarray, d: int, theta: np.ndarray, p_values: np.ndarray) -> np.ndarray:
    """Mean over n of exp(i(2pi (p n mod d)/d + p theta_n)) for each p."""
    out = np.empty(p_values.size, dtype=complex)
    rows = max(1, _CHUNK_ELEMS // max(d, 1))
    for a in range(0, p_values.size, rows):
        pc = p_values[a : a + rows, None]
        k = np.mod(pc * n_idx[None, :], d)
        ph = TWO_PI * k / d + pc * theta[None, :]
        out[a : a + rows] = np.exp(1j * ph).mean(axis=1)
    return out


def persistence_amplitudes(s: Spectrum, cfg: CyclicConfig, p_values: Iterable[int]) -> np.ndarray:
    """Complex (1/d) sum_n exp(i p (2 pi n/d - E_{q(n)} t0)); z is its modulus."""
    p = np.asarray(list(p_values) if not isinstance(p_values, np.ndarray) else p_values, dtype=np.int64).ravel()
    e = _ordered(s, cfg)
    return _phase_sums(np.arange(s.d, dtype=np.int64), s.d, -cfg.t0 * e, p)


def persistence(s: Spectrum, cfg: CyclicConfig, p_values: Iterable[int]) -> PersistenceSeries:
    p = np.asarray(list(p_values) if not isinstance(p_values, np.ndarray) else p_values, dtype=np.int64).ravel()
    z = np.abs(persistence_amplitudes(s, cfg, p))
    return PersistenceSeries(p, z, 1.0 - z**2)


def persistence_from_modes(delta: np.ndarray, p_values: Iterable[int]) -> np.ndarray:
    """z(p) = |mean exp(-2 pi i p Delta_n / d)|, the mode-fluctuation form."""
    delta = np.asarray(delta, dtype=float)
    d = delta.size
    p = np.asarray(list(p_values), dtype=float)
    return np.abs(np.exp(-2j * np.pi * np.outer(p, delta) / d).mean(axis=1))


def sff(s: Spectrum, t_values: Iterable[float]) -> np.ndarray:
    """K(t) = |(1/d) sum_n exp(-i E_n t)|^2."""
    t = np.asarray(list(t_values) if not isinstance(t_values, np.ndarray) else t_values, dtype=float).ravel()
    e = s.levels
    out = np.empty(t.size)
    rows = max(1, _CHUNK_ELEMS // s.d)
    for a in range(0, t.size, rows):
        c = np.exp(-1j * t[a : a + rows, None] * e[None, :]).mean(axis=1)
        out[a : a + rows] = c.real**2 + c.imag**2
    return out


def p_step_error(s: Spectrum, cfg: CyclicConfig, p: int) -> float:
    return float(persistence(s, cfg, [p]).eps[0])


def persistence_lower_bound(eps1: float, p, exact: bool = False):
    """Lower bound on persistence after p steps given the one-step error.

    Default is the leading-order form cos^2(p sqrt(eps1)) on
    |p| < pi / sqrt(4 eps1). With ``exact=True`` the one-step angle is
    arcsin(sqrt(eps1)) instead of sqrt(eps1); that version follows from the
    triangle inequality for angles between rays without approximation.
    """
    if not 0.0 <= eps1 <= 1.0:
        raise ParameterError(f"eps1 must be in [0, 1], got {eps1!r}")
    p = np.abs(np.asarray(p, dtype=float))
    ang = math.asin(math.sqrt(eps1)) if exact else math.sqrt(eps1)
    x = p * ang
    out = np.where(x < np.pi / 2, np.cos(x) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def step_bound_recurrence(theta1: Sequence[float], p: int, start: int = 0, return_path: bool = False):
    """Interval containing theta(p) = arccos z(p) for a generic cyclic permutation.

    theta1[k] is the one-step angle of element k; the chain starting at
    element ``start`` picks up theta1[start + j] at step j.
    """
    th = np.asarray(theta1, dtype=float)
    if th.size == 0:
        raise ParameterError("need at least one angle")
    if np.any(th < -1e-15) or np.any(th > np.pi / 2 + 1e-15) or not np.all(np.isfinite(th)):
        raise ParameterError("one-step angles must lie in [0, pi/2]")
    if p < 0:
        raise ParameterError("p must be non-negative")
    n = th.size
    lo, hi = 0.0, 0.0
    path = [(lo, hi)]
    for j in range(p):
        t = th[(start + j) % n]
        new_hi = min(hi + t, np.pi / 2)
        if lo <= t <= hi:
            new_lo = 0.0
        else:
            new_lo = min(abs(lo - t), abs(hi - t))
        lo, hi = new_lo, new_hi
        path.append((lo, hi))
    if return_path:
        return np.array(path)
    return lo, hi


def classify(
    s: Spectrum,
    cfg: CyclicConfig,
    thresholds: tuple[float, float, float] = DEFAULT_THRESHOLDS,
    span_factor: float = 2.0,
    keep_series: bool = True,
) -> ErgodicityReport:
    """Ergodicity and aperiodicity verdicts from z^2(p) against multiples of 1/d.

    Aperiodicity needs both z^2(p) <= c_a/d on [t_R, span] and no
    recurrence of the SFF above c_a/d for t0 t_R <= t <= t0 d, sampled at
    half-step resolution. ``persistence_aperiodic`` keeps the first test alone.
    """
    d = s.d
    if d < 2:
        raise ParameterError("classification needs d >= 2")
    c_e, c_a, c_r = (float(c) for c in thresholds)
    # c/d stops meaning "a multiple of the random floor" once it reaches 1
    lv_e, lv_a, lv_r = (min(c / d, LEVEL_CAP) for c in (c_e, c_a, c_r))
    span = int(math.ceil(span_factor * d))
    ps = np.arange(0, span + 1)
    ser = persistence(s, cfg, ps)
    z2 = ser.z**2
    half = int(math.ceil(d / 2))
    erg_window = z2[: half + 1]
    ergodic = bool(np.all(erg_window >= lv_e))
    t_R = randomization_step(ser, d, lv_r * d)
    recs: list = []
    if t_R is not None:
        tail = z2[t_R:]
        ap_margin = float(tail.max() / lv_a)
        p_ap = ergodic and bool(np.all(tail <= lv_a))
        # return probability over continuous t up to the cycle period
        tg = cfg.t0 * np.linspace(t_R, max(d, t_R), 2 * max(d - t_R, 0) + 1)
        K = sff(s, tg)
        sff_margin = float(K.max() / lv_a)
        recs = find_recurrences(tg, K, d, lv_a * d)
        aperiodic = p_ap and not recs
    else:
        ap_margin = sff_margin = None
        p_ap = aperiodic = False
    eps1 = float(ser.eps[1]) if span >= 1 else 0.0
    delta = mode_fluctuations(s, cfg)
    verdicts = {
        "sufficient_ergodicity_eps1_le_pi2_over_d2": bool(eps1 <= np.pi**2 / d**2),
        "necessary_aperiodicity_eps1_ge_pi2_over_4d2": bool(eps1 >= np.pi**2 / (4 * d**2)),
    }
    return ErgodicityReport(
        ergodic=ergodic,
        aperiodic=aperiodic,
        quasiperiodic=ergodic and not aperiodic,
        t_R=t_R,
        sigma2=float(np.var(delta)),
        thresholds=(c_e, c_a, c_r),
        bound_verdicts=verdicts,
        d=d,
        t0=cfg.t0,
        eps1=eps1,
        ergodic_margin=float(erg_window.min() / lv_e),
        aperiodic_margin=ap_margin,
        span=span,
        persistence_aperiodic=p_ap,
        sff_margin=sff_margin,
        recurrences=recs,
        series=ser if keep_series else None,
    )


def randomization_step(series: PersistenceSeries, d: int, c_r: float = 10.0) -> int | None:
    """First p >= 1 in the series with z^2(p) <= c_r/d, or None."""
    p = series.p_values
    ok = (p >= 1) & (series.z2 <= c_r / d)
    if not ok.any():
        return None
    return int(p[ok].min())


def find_recurrences(t, K, d: int, c: float = 10.0) -> list[dict]:
    """Maximal runs of the grid where K(t) > c/d, one dict per run."""
    t = np.asarray(t, dtype=float)
    K = np.asarray(K, dtype=float)
    over = K > c / d
    if not over.any():
        return []
    edges = np.diff(np.concatenate([[0], over.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    stops = np.nonzero(edges == -1)[0]
    out = []
    for a, b in zip(starts, stops):
        i = a + int(np.argmax(K[a:b]))
        out.append({"t_start": float(t[a]), "t_end": float(t[b - 1]), "t_peak": float(t[i]), "K_peak": float(K[i])})
    return out


# level-spacing statistics

_SURMISE_B = {1: np.pi / 4, 2: 4 / np.pi, 4: 64 / (9 * np.pi)}


def wigner_surmise_pdf(x, beta: int):
    """Two-level surmise a_b s^b exp(-b_b s^2), unit mean."""
    x = np.asarray(x, dtype=float)
    b = _SURMISE_B[beta]
    k = (beta + 1) / 2
    a = 2 * b**k / math.gamma(k)
    return a * x**beta * np.exp(-b * x * x)


def wigner_surmise_cdf(x, beta: int):
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return gammainc((beta + 1) / 2, _SURMISE_B[beta] * x * x)


def spacings(s: Spectrum, wrap: bool | None = None) -> np.ndarray:
    """Nearest-neighbour spacings over their mean; floquet spectra wrap around."""
    if s.d < 2:
        raise ParameterError("need d >= 2 for spacings")
    if wrap is None:
        wrap = s.kind == "floquet"
    sp = np.diff(s.levels)
    if wrap:
        sp = np.append(sp, s.levels[0] + TWO_PI - s.levels[-1])
    m = sp.mean()
    return sp / m if m > 0 else sp


@dataclass(frozen=True, eq=False)
class SpacingHistogram:
    edges: np.ndarray
    density: np.ndarray
    spacings: np.ndarray
    reference: dict

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def spacing_histogram(s: Spectrum, bins: int = 50, s_max: float = 4.0) -> SpacingHistogram:
    if bins < 1:
        raise ParameterError("bins must be positive")
    sp = spacings(s)
    edges = np.linspace(0.0, s_max, bins + 1)
    counts, _ = np.histogram(np.clip(sp, 0.0, s_max), bins=edges)
    width = edges[1] - edges[0]
    density = counts / (sp.size * width)
    c = 0.5 * (edges[1:] + edges[:-1])
    ref = {
        "goe": wigner_surmise_pdf(c, 1),
        "gue": wigner_surmise_pdf(c, 2),
        "gse": wigner_surmise_pdf(c, 4),
        "poisson": np.exp(-c),
    }
    return SpacingHistogram(edges, density, sp, ref)


def polar_trajectory(s: Spectrum, cfg: CyclicConfig, p_max: int) -> np.ndarray:
    """Rows (theta, r) with theta = 2 pi p / d and r = g(z)/g(1)."""
    if p_max < 1:
        raise ParameterError("p_max must be >= 1")
    d = s.d
    ps = np.arange(-p_max, p_max + 1)
    z = persistence(s, cfg, ps).z
    return np.column_stack([TWO_PI * ps / d, polar_radius(z, d)])


def polar_radius(z, d: int):
    def g(x):
        return 1.0 + np.tanh(np.log(np.maximum(np.asarray(x, float) ** 2, 1e-300) * d / 2) / 6)

    return g(z) / g(1.0)
