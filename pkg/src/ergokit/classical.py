"""Classical cyclic permutations for circle rotations and linear torus flows.

Coordinates are normalized so the circle is [0, 1) and the torus is
[0, 1)^2, both with total measure 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

TOL = 1e-12


class ArcSet:
    """Finite union of half-open arcs [a, b) on the unit circle, kept canonical."""

    __slots__ = ("arcs",)

    def __init__(self, intervals: Iterable[tuple[float, float]] = ()):
        pieces = []
        for a, b in intervals:
            a, b = float(a), float(b)
            length = b - a
            if length <= TOL:
                continue
            if length >= 1 - TOL:
                pieces = [(0.0, 1.0)]
                break
            a0 = a % 1.0
            if a0 >= 1 - TOL:
                a0 = 0.0
            b0 = a0 + length
            if b0 > 1 + TOL:
                pieces.append((a0, 1.0))
                pieces.append((0.0, b0 - 1.0))
            else:
                pieces.append((a0, min(b0, 1.0)))
        self.arcs = _merge(pieces)

    @classmethod
    def _raw(cls, arcs) -> "ArcSet":
        obj = cls.__new__(cls)
        obj.arcs = _merge(arcs)
        return obj

    @classmethod
    def full(cls) -> "ArcSet":
        return cls([(0.0, 1.0)])

    def measure(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    def __repr__(self) -> str:
        inner = ", ".join(f"[{a:.6g}, {b:.6g})" for a, b in self.arcs)
        return f"ArcSet({inner})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ArcSet) and arc_symdiff(self, other).measure() <= 2 * TOL

    def __and__(self, other):
        return arc_intersect(self, other)

    def __or__(self, other):
        return arc_union(self, other)

    def __xor__(self, other):
        return arc_symdiff(self, other)


def _merge(pieces) -> list[tuple[float, float]]:
    if not pieces:
        return []
    pieces = sorted((a, b) for a, b in pieces if b - a > TOL)
    out: list[list[float]] = []
    for a, b in pieces:
        if out and a <= out[-1][1] + TOL:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def arc_measure(a: ArcSet) -> float:
    return a.measure()


def arc_intersect(x: ArcSet, y: ArcSet) -> ArcSet:
    out = []
    i = j = 0
    xa, ya = x.arcs, y.arcs
    while i < len(xa) and j < len(ya):
        lo = max(xa[i][0], ya[j][0])
        hi = min(xa[i][1], ya[j][1])
        if hi - lo > TOL:
            out.append((lo, hi))
        if xa[i][1] < ya[j][1]:
            i += 1
        else:
            j += 1
    return ArcSet._raw(out)


def arc_complement(x: ArcSet) -> ArcSet:
    out = []
    cur = 0.0
    for a, b in x.arcs:
        if a - cur > TOL:
            out.append((cur, a))
        cur = b
    if 1.0 - cur > TOL:
        out.append((cur, 1.0))
    return ArcSet._raw(out)


def arc_union(x: ArcSet, y: ArcSet) -> ArcSet:
    return ArcSet._raw(list(x.arcs) + list(y.arcs))


def arc_difference(x: ArcSet, y: ArcSet) -> ArcSet:
    return arc_intersect(x, arc_complement(y))


def arc_symdiff(x: ArcSet, y: ArcSet) -> ArcSet:
    return arc_union(arc_difference(x, y), arc_difference(y, x))


def arc_rotate(x: ArcSet, theta: float) -> ArcSet:
    return ArcSet((a + theta, b + theta) for a, b in x.arcs)


def symdiff_measure(x: ArcSet, y: ArcSet) -> float:
    """mu(x) + mu(y) - 2 mu(x & y), cheaper than building the set."""
    return x.measure() + y.measure() - 2 * arc_intersect(x, y).measure()


# continued fractions


def continued_fraction(alpha, k_max: int = 30) -> list[int]:
    """Partial quotients of the exact binary value of alpha (or of a Fraction)."""
    x = Fraction(alpha)
    out = []
    for _ in range(k_max):
        a = math.floor(x)
        out.append(int(a))
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return out


def convergents(alpha, k_max: int = 12) -> list[Fraction]:
    cf = continued_fraction(alpha, k_max)
    h0, h1 = 1, cf[0]
    k0, k1 = 0, 1
    out = [Fraction(h1, k1)]
    for a in cf[1:]:
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
    return out


# circle rotations


@dataclass
class RotationPermutation:
    """Partition of the circle into q equal arcs listed in cyclic order."""

    alpha: float
    p: int
    q: int
    elements: list[ArcSet]
    symdiffs: np.ndarray
    epsbar: float

    @property
    def closed_form(self) -> float:
        return self.q * abs(self.alpha - self.p / self.q)


def _step_symdiffs(elements: Sequence[ArcSet], theta: float) -> np.ndarray:
    n = len(elements)
    return np.array([symdiff_measure(arc_rotate(elements[k], theta), elements[(k + 1) % n]) for k in range(n)])


def rotation_cyclic_permutation(alpha: float, q: int, k_max: int = 40) -> RotationPermutation:
    """Equal-arc cyclic permutation for rotation by alpha (mod 1) from p/q.

    Arc C_k = [k/q, (k+1)/q) is sent to C_{k+p}; listing D_j = C_{jp mod q}
    turns that into consecutive steps.
    """
    if q < 1:
        raise ParameterError("q must be positive")
    match = [c for c in convergents(alpha, k_max) if c.denominator == q]
    if match:
        p = match[0].numerator
    else:
        p = int(round(alpha * q))
        warnings.warn(f"q={q} is not a convergent denominator of alpha; using p={p}", stacklevel=2)
    if math.gcd(p, q) != 1:
        raise ParameterError(f"p/q = {p}/{q} not in lowest terms")
    arcs = [ArcSet([(k / q, (k + 1) / q)]) for k in range(q)]
    elements = [arcs[(j * p) % q] for j in range(q)]
    sd = _step_symdiffs(elements, alpha)
    return RotationPermutation(float(alpha), p, q, elements, sd, 0.5 * float(sd.sum()))


@dataclass
class ClassicalErrorReport:
    epsbar: float
    symdiffs: np.ndarray
    drifts: np.ndarray  # drifts[l-1, k] = mu[(T^l C_k) symdiff C_{k+l}]
    cascade_ok: bool
    cascade_worst: float


def classical_error(partition: Sequence[ArcSet], theta: float, steps: int = 1, check_cover: bool = True) -> ClassicalErrorReport:
    """Error of cycling ``partition`` in order, against rotation by theta."""
    n = len(partition)
    if n == 0:
        raise ParameterError("empty partition")
    if check_cover:
        tot = sum(c.measure() for c in partition)
        union = partition[0]
        for c in partition[1:]:
            union = arc_union(union, c)
        if abs(tot - 1) > 1e-9 or abs(union.measure() - 1) > 1e-9:
            raise ParameterError("partition does not cover the circle with disjoint sets")
    sd = _step_symdiffs(partition, theta)
    drifts = np.empty((steps, n))
    worst = -math.inf
    for ell in range(1, steps + 1):
        for k in range(n):
            drifts[ell - 1, k] = symdiff_measure(arc_rotate(partition[k], ell * theta), partition[(k + ell) % n])
            path = sum(sd[(k + m) % n] for m in range(ell))
            worst = max(worst, drifts[ell - 1, k] - path)
    return ClassicalErrorReport(0.5 * float(sd.sum()), sd, drifts, bool(worst <= 1e-9), float(worst))


def invariant_hull(x: ArcSet, rot: Fraction) -> ArcSet:
    """Smallest set containing x that is invariant under a rational rotation."""
    b = Fraction(rot).denominator
    out = x
    for j in range(1, b):
        out = arc_union(out, arc_rotate(x, j / b))
    return out


def count_components(partition: Sequence[ArcSet], invariant_sets: Sequence[ArcSet]) -> int:
    """Number of invariant sets that wholly contain at least one element."""
    m = 0
    for inv in invariant_sets:
        if any(c.measure() - arc_intersect(c, inv).measure() <= 1e-12 for c in partition):
            m += 1
    return m


def check_component_bound(partition: Sequence[ArcSet], theta: float, invariant_sets: Sequence[ArcSet]) -> dict:
    """Non-ergodic partitions pay at least M_C/n in error (for M_C >= 2)."""
    for inv in invariant_sets:
        if symdiff_measure(arc_rotate(inv, theta), inv) > 1e-9:
            raise ParameterError("supplied set is not invariant under the rotation")
    rep = classical_error(partition, theta)
    n = len(partition)
    mc = count_components(partition, invariant_sets)
    bound = mc / n if mc >= 2 else 0.0
    return {"M_C": mc, "n": n, "epsbar": rep.epsbar, "bound": bound, "ok": rep.epsbar >= bound - 1e-9}


def check_return_bound(partition: Sequence[ArcSet], theta: float) -> dict:
    """If no element overlaps itself after n steps the error is at least 1/n."""
    n = len(partition)
    overlaps = [arc_intersect(arc_rotate(c, n * theta), c).measure() for c in partition]
    applies = max(overlaps) <= 1e-12
    eb = classical_error(partition, theta, check_cover=False).epsbar
    return {"applies": applies, "n": n, "epsbar": eb, "bound": 1.0 / n if applies else 0.0, "ok": (not applies) or eb >= 1.0 / n - 1e-9}


# linear flow on the 2-torus


@dataclass(frozen=True)
class TorusPartitionSpec:
    n_x: int
    n_y: int
    alpha: float
    convergent: Fraction

    def __post_init__(self):
        if math.gcd(self.convergent.numerator, self.convergent.denominator) != 1:
            raise ParameterError("convergent must be in lowest terms")
        if self.convergent.denominator != self.n_y:
            raise ParameterError("n_y must equal the convergent denominator")

    @property
    def n(self) -> int:
        return self.n_x * self.n_y


@dataclass
class TorusPermutation:
    spec: TorusPartitionSpec
    epsbar: float
    symdiffs: np.ndarray
    x_sets: list[ArcSet]
    y_sets: list[ArcSet]

    @property
    def n(self) -> int:
        return self.spec.n


def product_symdiff_measure(ax: ArcSet, ay: ArcSet, bx: ArcSet, by: ArcSet) -> float:
    """mu[(ax x ay) symdiff (bx x by)] on the unit torus."""
    return ax.measure() * ay.measure() + bx.measure() * by.measure() - 2 * arc_intersect(ax, bx).measure() * arc_intersect(ay, by).measure()


def torus_step_symdiffs(x_sets, y_sets, shift: tuple[float, float]) -> np.ndarray:
    n = len(x_sets)
    dx, dy = shift
    out = np.empty(n)
    for i in range(n):
        j = (i + 1) % n
        out[i] = product_symdiff_measure(arc_rotate(x_sets[i], dx), arc_rotate(y_sets[i], dy), x_sets[j], y_sets[j])
    return out


def torus_cyclic_permutation(alpha: float, n_x: int, q: int, k_max: int = 40) -> TorusPermutation:
    """Product construction: n_x vertical strips cycled exactly, y cycled by the rotation permutation.

    Element k n_x + j is the time-j t_m image of strip 0 times the k-th arc
    of the rotation permutation, with t_m one n_x-th of the x period.
    """
    if n_x < 1:
        raise ParameterError("n_x must be positive")
    rot = rotation_cyclic_permutation(alpha, q, k_max)
    spec = TorusPartitionSpec(n_x, q, float(alpha), Fraction(rot.p, rot.q))
    strips = [ArcSet([(j / n_x, (j + 1) / n_x)]) for j in range(n_x)]
    x_sets, y_sets = [], []
    for k in range(q):
        for j in range(n_x):
            x_sets.append(strips[j])
            y_sets.append(arc_rotate(rot.elements[k], j * alpha / n_x))
    sd = torus_step_symdiffs(x_sets, y_sets, (1.0 / n_x, alpha / n_x))
    return TorusPermutation(spec, 0.5 * float(sd.sum()), sd, x_sets, y_sets)


def torus_cascade_check(tp: TorusPermutation, steps: int, ks: Iterable[int] | None = None) -> float:
    """Worst excess of the l-step drift over the summed one-step errors."""
    n = tp.n
    n_x = tp.spec.n_x
    dx, dy = 1.0 / n_x, tp.spec.alpha / n_x
    ks = range(n) if ks is None else ks
    worst = -math.inf
    for k in ks:
        for ell in range(1, steps + 1):
            j = (k + ell) % n
            drift = product_symdiff_measure(arc_rotate(tp.x_sets[k], ell * dx), arc_rotate(tp.y_sets[k], ell * dy), tp.x_sets[j], tp.y_sets[j])
            path = sum(tp.symdiffs[(k + m) % n] for m in range(ell))
            worst = max(worst, drift - path)
    return float(worst)


def convergent_sweep(alpha: float, qs: Iterable[int]) -> list[dict]:
    """(n, epsbar, n*epsbar) with n_x = q for each convergent denominator q."""
    rows = []
    for q in qs:
        tp = torus_cyclic_permutation(alpha, q, q)
        rows.append({"q": q, "n": tp.n, "epsbar": tp.epsbar, "n_epsbar": tp.n * tp.epsbar})
    return rows


def error_exponent(rows: Sequence[dict]) -> float:
    """Least-squares slope of log epsbar against log n."""
    n = np.log([r["n"] for r in rows])
    e = np.log([r["epsbar"] for r in rows])
    return float(np.polyfit(n, e, 1)[0])
