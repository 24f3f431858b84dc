"""Periodic/random split of the error unitary and the bounds built on it."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .cyclic import CyclicConfig, persistence, sff, _ordered
from .errors import ParameterError
from .spectra import TWO_PI, Spectrum

PERIODIC_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class ErrorDecomposition:
    """U_Delta^p = e^{i phi} [sqrt(1-eps) + sqrt(eps) sum_m nu_m U_C^m]."""

    p: int
    eps_p: float
    phi_delta: float
    nu: np.ndarray
    flags: tuple[str, ...] = ()
    c: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return int(self.nu.size)

    @property
    def periodic_only(self) -> bool:
        return "periodic-only" in self.flags

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "eps": self.eps_p,
            "phi": self.phi_delta,
            "flags": list(self.flags),
            "nu": [[float(v.real), float(v.imag)] for v in self.nu],
        }

    def error_phases(self) -> np.ndarray:
        """Eigenvalues of U_Delta^p rebuilt from (eps, phi, nu), one per n."""
        d = self.d
        # sum_m nu_m w^{mn} with w = exp(-2 pi i / d) is an unnormalized forward DFT
        rand = np.fft.fft(self.nu)
        return np.exp(1j * self.phi_delta) * (math.sqrt(max(1 - self.eps_p, 0.0)) + math.sqrt(self.eps_p) * rand)


def _error_eigs(s: Spectrum, cfg: CyclicConfig, p: int) -> np.ndarray:
    e = _ordered(s, cfg)
    d = s.d
    n = np.arange(d, dtype=np.int64)
    return np.exp(1j * (TWO_PI * np.mod(p * n, d) / d - p * cfg.t0 * e))


def decompose(s: Spectrum, cfg: CyclicConfig, p: int) -> ErrorDecomposition:
    if s.d < 2:
        raise ParameterError("decomposition needs d >= 2")
    f = _error_eigs(s, cfg, int(p))
    c = np.fft.ifft(f)
    c0 = c[0]
    # equals 1 - |c0|^2 by Parseval but keeps full relative precision when small
    eps = float(np.sum(c[1:].real ** 2 + c[1:].imag ** 2))
    eps = min(max(eps, 0.0), 1.0)
    flags = []
    if abs(c0) < PERIODIC_TOL:
        phi = 0.0
        flags.append("phase-undefined")
    else:
        phi = float(np.angle(c0))
    nu = np.zeros(s.d, dtype=complex)
    if eps < PERIODIC_TOL:
        flags.append("periodic-only")
    else:
        nu[1:] = c[1:] / (math.sqrt(eps) * np.exp(1j * phi))
    return ErrorDecomposition(int(p), eps, phi, nu, tuple(flags), c)


def circular_autocorr(nu: np.ndarray) -> np.ndarray:
    """a_m = sum_k conj(nu_k) nu_{k+m}, indices mod d."""
    f = np.fft.fft(nu)
    return np.fft.ifft(np.abs(f) ** 2)


def verify_nu_constraints(dec: ErrorDecomposition) -> dict:
    """Maximum violations of the normalization and unitarity constraints.

    The second constraint is nu_m + conj(nu_{-m}) + g a_m = 0 for m != 0 with
    g = sqrt(eps/(1-eps)). When eps > 1/2 the residual is reported after
    multiplying through by sqrt((1-eps)/eps) so it stays finite at eps = 1.
    """
    if dec.periodic_only:
        raise ParameterError("nu undefined for a periodic-only decomposition")
    nu = dec.nu
    eps = dec.eps_p
    norm = abs(float(np.sum(np.abs(nu) ** 2)) - 1.0)
    a = circular_autocorr(nu)
    pair = nu + np.conj(np.roll(nu[::-1], 1))  # nu_m + conj(nu_{-m})
    if eps <= 0.5:
        g = math.sqrt(eps / (1 - eps))
        res = pair + g * a
    else:
        res = math.sqrt((1 - eps) / eps) * pair + a
    c2 = float(np.max(np.abs(res[1:]))) if nu.size > 1 else 0.0
    return {"normalization": norm, "unitarity": c2, "scaled": eps > 0.5}


def nu_sff_identity(s: Spectrum, cfg: CyclicConfig, p: int) -> tuple[float, float]:
    """K(p t0) computed directly and from eps_p |nu_{-p}(p)|^2."""
    if p % s.d == 0:
        raise ParameterError("p must not be a multiple of d")
    dec = decompose(s, cfg, p)
    if dec.periodic_only:
        raise ParameterError("eps_p = 0: the random part is empty")
    k_direct = float(sff(s, [p * cfg.t0])[0])
    k_nu = dec.eps_p * abs(dec.nu[(-p) % s.d]) ** 2
    return k_direct, float(k_nu)


def gaussian_estimate(eps1: float, p):
    if not 0.0 <= eps1 < 1.0:
        raise ParameterError("eps1 must be in [0, 1)")
    p = np.asarray(p, dtype=float)
    g2 = eps1 / (1 - eps1)
    out = np.exp(-0.5 * g2 * p * p - 0.5 * eps1 * np.abs(p))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PairingDiagnostic:
    p: int
    residuals: np.ndarray
    magnitudes: np.ndarray
    ratio: float


def pairing_diagnostic(s: Spectrum, cfg: CyclicConfig, p: int) -> PairingDiagnostic:
    """Compare rescaled error coefficients at step p with those at step 1.

    The coefficient of U_C^m in U_Delta^p e^{-i phi_p}, divided by p z(p),
    should not depend on p while p is small against 1/sqrt(eps_1).
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    z = persistence(s, cfg, [1, p]).z
    if z[1] < 1e-12:
        raise ParameterError("z(p) vanishes; diagnostic only valid for small p")
    c1 = decompose(s, cfg, 1)
    cp = c1 if p == 1 else decompose(s, cfg, p)
    t1 = np.sqrt(c1.eps_p) * c1.nu / z[0]
    tp = np.sqrt(cp.eps_p) * cp.nu / (p * z[1])
    res = np.abs(t1 - tp) ** 2
    mag = np.abs(t1) ** 2
    return PairingDiagnostic(int(p), res, mag, float(res[1:].mean() / mag[1:].mean()))


def pairing_quality(dec: ErrorDecomposition) -> complex:
    """nu_C = -sum_r nu_r nu_{-r}; close to 1 when nu_m ~ -conj(nu_{-m})."""
    if dec.periodic_only:
        raise ParameterError("nu undefined for a periodic-only decomposition")
    nu = dec.nu
    return complex(-np.sum(nu[1:] * nu[1:][::-1]))


@dataclass(frozen=True)
class SffFit:
    """K(t) ~ lam t^gamma up to the cutoff set by M."""

    lam: float
    gamma: float
    t0: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError("lambda must be positive")
        if self.gamma < 0:
            raise ParameterError("gamma must be >= 0")
        if not self.t0 > 0:
            raise ParameterError("t0 must be positive")
        if self.M < 1:
            raise ParameterError("M must be >= 1")
        if self.lam >= 0.1:
            warnings.warn("lambda >= 0.1: the small-amplitude assumption is doubtful", stacklevel=2)


def min_error_bound(fit: SffFit) -> float:
    """Lower bound on the one-step error implied by a power-law SFF."""
    lam, g, t0, M = fit.lam, fit.gamma, fit.t0, fit.M
    if abs(g - 1.0) <= 1e-9:
        return lam * t0 * math.log(1.0 / lam)
    if g < 1:
        z = np.pi**2 / 6 if g == 0 else float(zeta(2.0 - g))
        return 2 * lam * t0**g * z
    return (2 * lam * t0**g * (g - 1) / M ** (g - 1)) ** (2 / (g + 1))


def rigidity_targets(d: int) -> dict:
    """Mode-fluctuation variances and randomization steps for the beta ensembles."""
    if d < 1:
        raise ParameterError("d must be positive")
    ld = math.log(d)
    rows = []
    for beta, alpha in ((1, 2.0), (2, math.sqrt(2)), (4, 1.0)):
        rows.append({
            "beta": beta,
            "alpha": alpha,
            "sigma2_beta": ld / (beta * np.pi**2),
            "sigma2_alpha": alpha**2 * ld / (4 * np.pi**2),
            "p_R": d * math.sqrt(beta) / 2,
        })
    return {"d": d, "rows": rows}
