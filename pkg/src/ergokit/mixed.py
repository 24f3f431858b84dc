"""Mixed-state cyclic permutations and the pure-from-mixed persistence bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .rng import make_rng
from . import _cbe

DIM_CAP = 256
_ORTHO_TOL = 1e-8


def haar_vectors(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary columns via QR with the phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


@dataclass(frozen=True, eq=False)
class SpectralUnitary:
    """U(t) = V diag(exp(-i E t)) V^dagger from energies and eigenvectors."""

    energies: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).ravel()
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (e.size, e.size):
            raise ParameterError("eigenvector matrix must be d x d")
        _check_orthonormal(v)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "vectors", v)

    @property
    def d(self) -> int:
        return self.energies.size

    def matrix(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)[None, :]) @ self.vectors.conj().T


def _check_orthonormal(b: np.ndarray) -> None:
    g = b.conj().T @ b
    dev = np.max(np.abs(g - np.eye(g.shape[0]))) if g.size else 0.0
    if dev > _ORTHO_TOL:
        raise ParameterError(f"basis not orthonormal (Gram deviation {dev:.2e})")


@dataclass(frozen=True, eq=False)
class SubspacePartition:
    """n mutually orthogonal blocks of equal size m = ceil(d/n) in C^{d_n}.

    Coordinates d..d_n-1 are auxiliary padding directions; each block holds
    m or m-1 physical directions, topped up with padding where needed.
    """

    d: int
    n: int
    bases: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ParameterError("need d >= 1 and n >= 1")
        if len(self.bases) != self.n:
            raise ParameterError("need one basis per block")
        m = self.m
        dn = self.d_n
        for b in self.bases:
            if b.shape != (dn, m):
                raise ParameterError(f"each block basis must be {dn} x {m}")
        _check_orthonormal(np.hstack(self.bases))

    @property
    def m(self) -> int:
        return -(-self.d // self.n)

    @property
    def d_n(self) -> int:
        return self.n * self.m

    @classmethod
    def from_unitary(cls, w: np.ndarray, n: int) -> "SubspacePartition":
        """Split the columns of a d x d unitary into n consecutive groups."""
        d = w.shape[0]
        m = -(-d // n)
        dn = n * m
        short = dn - d  # blocks that receive one padding direction
        sizes = [m - 1 if k < short else m for k in range(n)]
        bases = []
        col = 0
        aux = d
        for sz in sizes:
            b = np.zeros((dn, m), dtype=complex)
            b[:d, :sz] = w[:, col : col + sz]
            col += sz
            if sz < m:
                b[aux, m - 1] = 1.0
                aux += 1
            bases.append(b)
        return cls(d, n, tuple(bases))

    def projector(self, k: int) -> np.ndarray:
        b = self.bases[k % self.n]
        return b @ b.conj().T


def padded(u: np.ndarray, d_n: int) -> np.ndarray:
    d = u.shape[0]
    out = np.eye(d_n, dtype=complex)
    out[:d, :d] = u
    return out


def _step(U, t_m: float | None, part: SubspacePartition) -> np.ndarray:
    u = U.matrix(t_m) if isinstance(U, SpectralUnitary) else np.asarray(U, dtype=complex)
    if u.shape != (part.d, part.d):
        raise ParameterError(f"unitary is {u.shape}, partition expects d={part.d}")
    return padded(u, part.d_n)


def principal_cosines(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Singular values of B^dagger A, descending, clipped into [0, 1]."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    _check_orthonormal(A)
    _check_orthonormal(B)
    s = np.linalg.svd(B.conj().T @ A, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def _pair_cosines(u: np.ndarray, part: SubspacePartition, k: int) -> np.ndarray:
    a = u @ part.bases[k]
    b = part.bases[(k + 1) % part.n]
    return np.clip(np.linalg.svd(b.conj().T @ a, compute_uv=False), 0.0, 1.0)


def mixed_persistence(U, part: SubspacePartition, t_m: float | None = None) -> np.ndarray:
    """Z_k = (d_n/n^2) Tr[U rho_k U^dagger rho_{k+1}] with rho_k = Pi_k / m."""
    u = _step(U, t_m, part)
    out = np.empty(part.n)
    for k in range(part.n):
        out[k] = float(np.sum(_pair_cosines(u, part, k) ** 2)) / part.d_n
    return out


def pure_from_mixed_bound(P: float) -> float:
    """floor(P) + sqrt(P - floor(P)): least possible sum of cosines with squares summing to P."""
    if P < 0:
        raise ParameterError("P must be non-negative")
    f = math.floor(P)
    return f + math.sqrt(P - f)


@dataclass
class MixedTheoremReport:
    P: np.ndarray
    R: np.ndarray
    bound: np.ndarray
    margin: np.ndarray
    violations: int
    guaranteed_mean_persistence: float

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"k": k, "P": float(p), "R": float(r), "bound": float(b), "margin": float(m)}
                for k, (p, r, b, m) in enumerate(zip(self.P, self.R, self.bound, self.margin))
            ],
            "violations": self.violations,
            "guaranteed_mean_persistence": self.guaranteed_mean_persistence,
        }


def verify_mixed_theorem(U, part: SubspacePartition, t_m: float | None = None, tol: float = 1e-9) -> MixedTheoremReport:
    u = _step(U, t_m, part)
    P, R, bd = [], [], []
    for k in range(part.n):
        s = _pair_cosines(u, part, k)
        P.append(float(np.sum(s**2)))
        R.append(float(np.sum(s)))
        bd.append(pure_from_mixed_bound(P[-1]))
    P, R, bd = np.array(P), np.array(R), np.array(bd)
    margin = R - bd
    return MixedTheoremReport(P, R, bd, margin, int(np.sum(margin < -tol)), float(bd.sum() / part.d))


def random_instance(d: int, n: int, seed: int, stream: int = 0, dim_cap: int = DIM_CAP):
    """Random (U, partition, t_m): CUE phases as energies, Haar eigenvectors and blocks."""
    if d > dim_cap:
        raise ParameterError(f"d={d} exceeds the dense-algebra cap {dim_cap}")
    if not 1 <= n <= d:
        raise ParameterError("need 1 <= n <= d")
    rng = make_rng(seed, stream)
    energies = _cbe.eigphases(_cbe.verblunsky(d, 2.0, rng))
    U = SpectralUnitary(energies, haar_vectors(d, rng))
    part = SubspacePartition.from_unitary(haar_vectors(d, rng), n)
    t_m = float(rng.uniform(0.0, 2 * np.pi))
    return U, part, t_m
