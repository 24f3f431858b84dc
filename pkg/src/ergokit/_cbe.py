"""Circular beta ensemble eigenphases from Verblunsky coefficients.

The eigenvalues of the CMV matrix built from the coefficients are the zeros
of the paraorthogonal polynomial z*Phi_{n-1}(z) - conj(a_{n-1}) Phi*_{n-1}(z).
We build its monomial coefficients with the Szego recursion, bracket the
zeros on an FFT grid of the unit circle and polish with safeguarded Newton.
"""
from __future__ import annotations

import numpy as np


def verblunsky(n: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Independent coefficients with the Killip-Nenciu distribution."""
    a = np.empty(n, dtype=complex)
    k = np.arange(n - 1)
    shape = 0.5 * beta * (n - k - 1)
    r2 = rng.beta(1.0, shape) if n > 1 else np.empty(0)
    ang = rng.uniform(0.0, 2 * np.pi, size=n)
    a[:-1] = np.sqrt(r2) * np.exp(1j * ang[:-1])
    a[-1] = np.exp(1j * ang[-1])
    return a


def paraorthogonal(a: np.ndarray) -> np.ndarray:
    """Monomial coefficients (lowest first) of the degree-n polynomial."""
    n = len(a)
    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    for k in range(n):
        cur = c[: k + 1].copy()
        star = np.conj(cur[::-1])
        c[1 : k + 2] = cur
        c[0] = 0.0
        c[: k + 1] -= np.conj(a[k]) * star
    return c


def _real_form(coef, rot, th):
    # rot * exp(-i n th / 2) * P(exp(i th)) is real on the circle
    n = len(coef) - 1
    z = np.exp(1j * th)
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for ck in coef[::-1]:
        dp = dp * z + p
        p = p * z + ck
    e = rot * np.exp(-0.5j * n * th)
    return (e * p).real, (e * (1j * z * dp - 0.5j * n * p)).real


def eigphases(a: np.ndarray, grid: int = 16, tol: float = 2e-12, max_iter: int = 60) -> np.ndarray:
    n = len(a)
    if n == 1:
        return np.array([np.mod(np.angle(np.conj(a[0])), 2 * np.pi)])
    coef = paraorthogonal(a)
    rot = np.sqrt(-a[-1] + 0j)
    N = grid * n
    while True:
        pv = np.fft.ifft(coef, N) * N
        th = 2 * np.pi * np.arange(N) / N
        r = (rot * np.exp(-0.5j * n * th) * pv).real
        r = np.append(r, r[0] * (-1) ** n)
        # a zero sitting exactly on a grid point belongs to the cell it opens
        idx = np.nonzero((np.sign(r[:-1]) * np.sign(r[1:]) < 0) | (r[:-1] == 0))[0]
        if len(idx) == n:
            break
        N *= 4
        if N > 2**26:
            raise FloatingPointError("could not bracket all eigenphases")
    h = 2 * np.pi / N
    lo, hi = th[idx], th[idx] + h
    flo, fhi = r[idx], r[idx + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = lo - flo * h / (fhi - flo)
    x = np.where(np.isfinite(x), x, lo)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        ia = np.nonzero(active)[0]
        if len(ia) == 0:
            break
        f, df = _real_form(coef, rot, x[ia])
        same = np.sign(f) == np.sign(flo[ia])
        lo[ia] = np.where(same, x[ia], lo[ia])
        flo[ia] = np.where(same, f, flo[ia])
        hi[ia] = np.where(same, hi[ia], x[ia])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x[ia] - f / df
        bad = ~((xn > lo[ia]) & (xn < hi[ia]))
        xn = np.where(bad, 0.5 * (lo[ia] + hi[ia]), xn)
        done = (np.abs(xn - x[ia]) < tol) | (f == 0)
        x[ia] = np.where(f == 0, x[ia], xn)
        active[ia[done]] = False
    return np.sort(np.mod(x, 2 * np.pi))
