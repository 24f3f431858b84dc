import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergokit.cyclic import CyclicConfig, persistence, persistence_lower_bound
from ergokit.errcoeff import (
    ErrorDecomposition,
    SffFit,
    circular_autocorr,
    decompose,
    gaussian_estimate,
    min_error_bound,
    nu_sff_identity,
    pairing_diagnostic,
    pairing_quality,
    rigidity_targets,
    verify_nu_constraints,
)
from ergokit.errors import ParameterError
from ergokit.spectra import Spectrum, picket_fence, sample_circular_beta, sample_poisson
from oracles import dense_error_coefficients


def _cfg(s):
    return CyclicConfig.for_spectrum(s)


# decomposition


@pytest.mark.parametrize("p", [1, 2, 5])
def test_coefficients_match_dense_trace(p):
    s = sample_poisson(12, 4)
    cfg = _cfg(s)
    dec = decompose(s, cfg, p)
    ref = dense_error_coefficients(s.levels[cfg.q], cfg.t0, p)
    assert np.max(np.abs(dec.c - ref)) < 1e-12


def test_decompose_normalization_and_nu0():
    s = sample_circular_beta(256, 2, 11)
    dec = decompose(s, _cfg(s), 1)
    assert dec.nu[0] == 0
    assert abs(np.sum(np.abs(dec.nu) ** 2) - 1) < 1e-10
    assert dec.eps_p == pytest.approx(1 - persistence(s, _cfg(s), [1]).z2[0], abs=1e-15)


@pytest.mark.parametrize("p", [1, 3, 64])
def test_reconstruction_round_trip(p):
    s = sample_circular_beta(128, 1, 5)
    cfg = _cfg(s)
    dec = decompose(s, cfg, p)
    n = np.arange(s.d)
    target = np.exp(1j * (2 * np.pi * np.mod(p * n, s.d) / s.d - p * cfg.t0 * s.levels[cfg.q]))
    assert np.max(np.abs(dec.error_phases() - target)) < 1e-10


def test_picket_is_periodic_only():
    s = picket_fence(40)
    dec = decompose(s, _cfg(s), 1)
    assert dec.periodic_only and dec.eps_p < 1e-14 and not np.any(dec.nu)
    with pytest.raises(ParameterError):
        verify_nu_constraints(dec)
    with pytest.raises(ParameterError):
        pairing_quality(dec)
    with pytest.raises(ParameterError):
        nu_sff_identity(s, _cfg(s), 1)


def test_degenerate_two_level_case():
    s = Spectrum(np.zeros(2))
    dec = decompose(s, CyclicConfig(1.0, [0, 1]), 1)
    assert dec.eps_p == pytest.approx(1.0)
    assert abs(dec.nu[1]) == pytest.approx(1.0)
    assert "phase-undefined" in dec.flags
    rep = verify_nu_constraints(dec)
    assert rep["unitarity"] < 1e-12 and rep["scaled"]
    assert pairing_quality(dec) == pytest.approx(-dec.nu[1] ** 2)


def test_decompose_requires_two_levels():
    with pytest.raises(ParameterError):
        decompose(Spectrum(np.zeros(1)), CyclicConfig(1.0, [0]), 1)


def test_to_dict_pairs():
    s = sample_poisson(8, 1)
    d = decompose(s, _cfg(s), 1).to_dict()
    assert len(d["nu"]) == 8 and all(len(v) == 2 for v in d["nu"])


# constraints


@pytest.mark.parametrize("gen", ["cue", "poisson"])
@pytest.mark.parametrize("p", [1, 2, 7])
def test_constraints_hold(gen, p):
    s = sample_circular_beta(200, 2, 3) if gen == "cue" else sample_poisson(200, 3)
    rep = verify_nu_constraints(decompose(s, _cfg(s), p))
    assert rep["normalization"] < 1e-10 and rep["unitarity"] < 1e-8


def test_constraint_detects_scaled_nu():
    s = sample_circular_beta(64, 2, 1)
    dec = decompose(s, _cfg(s), 1)
    bad = ErrorDecomposition(dec.p, dec.eps_p, dec.phi_delta, 2 * dec.nu)
    assert verify_nu_constraints(bad)["normalization"] == pytest.approx(3.0, abs=1e-10)


def test_autocorr_matches_direct_sum():
    rng = np.random.default_rng(0)
    nu = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    direct = [sum(np.conj(nu[k]) * nu[(k + m) % 9] for k in range(9)) for m in range(9)]
    assert np.allclose(circular_autocorr(nu), direct, atol=1e-12)


# SFF identity


@pytest.mark.parametrize("case", [("cue", 256, 11, 3), ("poisson", 64, 5, 1)])
def test_nu_sff_identity(case):
    gen, d, seed, p = case
    s = sample_circular_beta(d, 2, seed) if gen == "cue" else sample_poisson(d, seed)
    k_direct, k_nu = nu_sff_identity(s, _cfg(s), p)
    assert abs(k_direct - k_nu) < 1e-10


def test_nu_sff_identity_rejects_period_multiple():
    s = sample_poisson(16, 1)
    with pytest.raises(ParameterError):
        nu_sff_identity(s, _cfg(s), 32)


# Gaussian estimate


def test_gaussian_examples():
    assert np.all(gaussian_estimate(0.0, np.arange(-5, 6)) == 1.0)
    eps = 1e-10
    assert gaussian_estimate(eps, 1 / math.sqrt(eps)) == pytest.approx(math.exp(-0.5), rel=1e-4)
    with pytest.raises(ParameterError):
        gaussian_estimate(1.0, 2)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 0.01), st.integers(0, 20000))
def test_gaussian_above_sinusoidal_bound(eps, p):
    if eps > 0 and p > math.pi / (2 * math.sqrt(eps)):
        p = int(math.pi / (2 * math.sqrt(eps)))
    # the cos^2 form drops O(p eps^1.5) terms; at p = 1 it sits eps^2/3 above 1 - eps
    assert gaussian_estimate(eps, p) >= persistence_lower_bound(eps, p) - p * eps**1.5 - 1e-12


def test_gaussian_bound_gap_is_second_order():
    eps = 0.0078125
    gap = persistence_lower_bound(eps, 1) - gaussian_estimate(eps, 1)
    assert 0 < gap < eps**2 / 3 * 1.01


def test_gaussian_tracks_cue_persistence(ensembles):
    rep = ensembles.report("cue", 7)
    ser = rep.series
    mask = ser.p_values <= rep.t_R
    est = gaussian_estimate(rep.eps1, ser.p_values[mask])
    assert np.max(np.abs(est - ser.z[mask])) <= 0.05


# pairing


def test_pairing_p1_is_zero():
    s = sample_circular_beta(128, 2, 2)
    pd = pairing_diagnostic(s, _cfg(s), 1)
    assert np.all(pd.residuals == 0) and pd.ratio == 0


@pytest.mark.parametrize("p,limit", [(100, 0.1), (250, 0.3)])
def test_pairing_ratio_cue(ensembles, p, limit):
    s = ensembles.spectrum("cue", 7)
    assert pairing_diagnostic(s, _cfg(s), p).ratio < limit


def test_pairing_rejects_vanishing_persistence():
    s = Spectrum(np.zeros(2))
    with pytest.raises(ParameterError):
        pairing_diagnostic(s, CyclicConfig(1.0, [0, 1]), 1)
    with pytest.raises(ParameterError):
        pairing_diagnostic(sample_poisson(8, 0), _cfg(sample_poisson(8, 0)), 0)


def test_pairing_quality_cue_near_one():
    s = sample_circular_beta(1024, 2, 3)
    assert abs(pairing_quality(decompose(s, _cfg(s), 1)) - 1) < 0.2
    sp = sample_poisson(1024, 3)
    assert np.isfinite(abs(pairing_quality(decompose(sp, _cfg(sp), 1))))


# minimum-error bounds


def test_min_error_bound_examples():
    assert min_error_bound(SffFit(1 / 1024, 0.0, 3.7)) == pytest.approx(np.pi**2 / (3 * 1024), rel=1e-12)
    lam = 1 / 2048**2
    assert min_error_bound(SffFit(lam, 1.0)) == pytest.approx(lam * math.log(1 / lam), rel=1e-12)
    # the beta = 2 Wigner-Dyson form 4 ln d / (beta d^2)
    assert min_error_bound(SffFit(lam, 1.0)) == pytest.approx(3.636e-6, abs=1e-9)
    assert min_error_bound(SffFit(1e-6, 2.0, 1.0, 2.0)) == pytest.approx(1e-4, rel=1e-12)


def test_zeta_branch_against_direct_sum():
    g = 0.4
    direct = sum(k ** (g - 2) for k in range(1, 2_000_000)) + (2_000_000 ** (g - 1)) / (1 - g)
    assert min_error_bound(SffFit(1e-3, g)) == pytest.approx(2e-3 * direct, rel=1e-8)


def test_gamma_snaps_to_log_branch():
    a = min_error_bound(SffFit(1e-4, 1.0))
    assert min_error_bound(SffFit(1e-4, 1.0 + 5e-10)) == a


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 1.5, 3.0])
def test_min_error_bound_monotone_in_lambda(gamma):
    lams = np.geomspace(1e-8, 0.05, 25)
    vals = [min_error_bound(SffFit(lam, gamma, 1.0, 2.0)) for lam in lams]
    assert np.all(np.diff(vals) > 0)


def test_sff_fit_validation():
    with pytest.raises(ParameterError):
        SffFit(1e-3, -0.5)
    with pytest.raises(ParameterError):
        SffFit(0.0, 1.0)
    with pytest.raises(ParameterError):
        SffFit(1e-3, 1.0, M=0.5)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        SffFit(0.5, 1.0)
    assert any("lambda" in str(x.message) for x in w)


def test_rigidity_targets():
    t = rigidity_targets(2048)
    rows = {r["beta"]: r for r in t["rows"]}
    assert rows[2]["sigma2_beta"] == pytest.approx(math.log(2048) / (2 * np.pi**2), rel=1e-14)
    assert rows[2]["sigma2_beta"] == pytest.approx(0.3863, abs=1e-4)
    assert rows[2]["p_R"] == pytest.approx(1448.15, abs=0.01)
    assert rows[1]["p_R"] == 1024 and rows[4]["p_R"] == 2048
    for r in t["rows"]:
        assert r["sigma2_alpha"] == pytest.approx(r["sigma2_beta"], rel=1e-12)
    with pytest.raises(ParameterError):
        rigidity_targets(0)
