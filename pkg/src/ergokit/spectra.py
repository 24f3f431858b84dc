"""Spectrum container and generators."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import _cbe
from .errors import EmptySpectrumError, ParameterError, SpectrumFormatError
from .rng import make_rng

TWO_PI = 2 * np.pi
KINDS = ("hamiltonian", "floquet")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted, immutable energy levels (or eigenphases) plus provenance."""

    levels: np.ndarray
    kind: str = "hamiltonian"
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lv = np.array(self.levels, dtype=float).ravel()
        if lv.size < 1:
            raise EmptySpectrumError("spectrum needs at least one level")
        if self.kind not in KINDS:
            raise ParameterError(f"unknown spectrum kind {self.kind!r}")
        if not np.all(np.isfinite(lv)):
            raise ParameterError("levels must be finite")
        if np.any(np.diff(lv) < 0):
            raise ParameterError("levels must be non-decreasing; use Spectrum.from_levels")
        if self.kind == "floquet" and (lv[0] < 0 or lv[-1] >= TWO_PI):
            raise ParameterError("floquet phases must lie in [0, 2pi)")
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_levels(cls, levels: Iterable[float], kind: str = "hamiltonian", meta: dict | None = None) -> "Spectrum":
        """Stable-sort arbitrary levels; reordering is recorded in meta."""
        lv = np.asarray(list(levels) if not isinstance(levels, np.ndarray) else levels, dtype=float).ravel()
        order = np.argsort(lv, kind="stable")
        meta = dict(meta or {})
        was_sorted = bool(np.all(order == np.arange(lv.size)))
        meta["input_sorted"] = was_sorted
        if not was_sorted:
            meta["original_order"] = order.tolist()
        return cls(lv[order], kind, meta)

    @property
    def d(self) -> int:
        return int(self.levels.size)

    def __len__(self) -> int:
        return self.d

    def __repr__(self) -> str:
        gen = self.meta.get("generator", "?")
        return f"Spectrum(d={self.d}, kind={self.kind}, generator={gen})"


@dataclass(frozen=True)
class TorusParams:
    omega_x: float
    omega_y: float
    L1: float
    L2: float

    def __post_init__(self):
        if not (self.omega_x > 0 and self.L1 > 0 and self.L2 > 0):
            raise ParameterError("need omega_x > 0, L1 > 0, L2 > 0")
        if not math.isfinite(self.omega_y):
            raise ParameterError("omega_y must be finite")


def _check_d(d) -> int:
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d!r}")
    return int(d)


def sample_circular_beta(d: int, beta: int, seed: int, *, stream: int = 0) -> Spectrum:
    """Eigenphases of a COE/CUE/CSE matrix (beta = 1, 2, 4).

    For beta = 4 the d returned phases are the distinct ones; each is doubly
    degenerate in the quaternion-self-dual matrix.
    """
    d = _check_d(d)
    if beta not in (1, 2, 4):
        raise ParameterError(f"beta must be 1, 2 or 4, got {beta!r}")
    rng = make_rng(seed, stream)
    a = _cbe.verblunsky(d, float(beta), rng)
    ph = _cbe.eigphases(a)
    # mod can round 2pi - tiny up to exactly 2pi
    ph[ph >= TWO_PI] = 0.0
    ph.sort()
    name = {1: "coe", 2: "cue", 4: "cse"}[beta]
    return Spectrum(ph, "floquet", {"generator": name, "params": {"d": d, "beta": beta}, "seed": int(seed), "stream": int(stream)})


def sample_poisson(d: int, seed: int, *, stream: int = 0) -> Spectrum:
    d = _check_d(d)
    rng = make_rng(seed, stream)
    ph = np.sort(rng.uniform(0.0, TWO_PI, size=d))
    return Spectrum(ph, "floquet", {"generator": "poisson", "params": {"d": d}, "seed": int(seed), "stream": int(stream)})


def torus_spectrum(params: TorusParams) -> Spectrum:
    """Energies J.omega of lattice points inside the rotated cutoff box.

    Both inequalities are strict, so boundary points (only possible for
    rational frequency ratios) are excluded.
    """
    wx, wy, L1, L2 = params.omega_x, params.omega_y, params.L1, params.L2
    w2 = wx * wx + wy * wy
    jmax = int(math.ceil(math.hypot(L1, L2) / math.sqrt(w2))) + 1
    j = np.arange(-jmax, jmax + 1, dtype=float)
    jx, jy = np.meshgrid(j, j, indexing="ij")
    e = jx * wx + jy * wy
    v = jx * wy - jy * wx
    m = (np.abs(e) < L1) & (np.abs(v) < L2)
    if not np.any(m):
        raise EmptySpectrumError("no lattice points inside the cutoff")
    return Spectrum(np.sort(e[m], kind="stable"), "hamiltonian", {
        "generator": "torus",
        "params": {"omega_x": wx, "omega_y": wy, "L1": L1, "L2": L2},
    })


def picket_fence(d: int, spacing: float = 1.0) -> Spectrum:
    d = _check_d(d)
    if not spacing > 0:
        raise ParameterError("spacing must be positive")
    return Spectrum(np.arange(d) * float(spacing), "hamiltonian", {"generator": "picket", "params": {"d": d, "spacing": float(spacing)}})


def generate(kind: str, *, d: int | None = None, seed: int = 0, stream: int = 0, **kw) -> Spectrum:
    """Dispatch by generator name (used by the CLI and sweeps)."""
    kind = kind.lower()
    if kind in ("coe", "cue", "cse"):
        return sample_circular_beta(d, {"coe": 1, "cue": 2, "cse": 4}[kind], seed, stream=stream)
    if kind == "poisson":
        return sample_poisson(d, seed, stream=stream)
    if kind == "picket":
        return picket_fence(d, kw.get("spacing", 1.0))
    if kind == "torus":
        wx, wy = kw["omega"]
        return torus_spectrum(TorusParams(wx, wy, kw["L1"], kw["L2"]))
    raise ParameterError(f"unknown generator {kind!r}")


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def save_spectrum(s: Spectrum, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in s.levels:
            fh.write("%.17g\n" % x)
    meta = {"kind": s.kind, "generator": s.meta.get("generator"), "params": s.meta.get("params"), "seed": s.meta.get("seed")}
    if "stream" in s.meta:
        meta["stream"] = s.meta["stream"]
    with open(sidecar_path(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spectrum(path: str | Path, kind: str | None = None) -> Spectrum:
    path = Path(path)
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise SpectrumFormatError(f"cannot parse {line!r} as a number", lineno) from None
            if not math.isfinite(vals[-1]):
                raise SpectrumFormatError(f"non-finite level {line!r}", lineno)
    if not vals:
        raise EmptySpectrumError(f"{path}: no levels found")
    meta: dict[str, Any] = {"source": str(path)}
    side = sidecar_path(path)
    if side.exists():
        with open(side, encoding="utf-8") as fh:
            extra = json.load(fh)
        meta.update({k: v for k, v in extra.items() if k != "kind"})
        kind = kind or extra.get("kind")
    return Spectrum.from_levels(np.array(vals), kind or "hamiltonian", meta)
