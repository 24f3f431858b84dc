"""Cyclic ergodicity and aperiodicity diagnostics from energy spectra."""

__version__ = "0.1.0"

from .spectra import (  # noqa: E402
    Spectrum,
    TorusParams,
    load_spectrum,
    picket_fence,
    sample_circular_beta,
    sample_poisson,
    save_spectrum,
    torus_spectrum,
)
from .cyclic import (  # noqa: E402
    CyclicConfig,
    ErgodicityReport,
    PersistenceSeries,
    classify,
    heisenberg_t0,
    mode_fluctuations,
    persistence,
    persistence_lower_bound,
    sff,
)

__all__ = [
    "Spectrum",
    "TorusParams",
    "load_spectrum",
    "save_spectrum",
    "picket_fence",
    "sample_circular_beta",
    "sample_poisson",
    "torus_spectrum",
    "CyclicConfig",
    "ErgodicityReport",
    "PersistenceSeries",
    "classify",
    "heisenberg_t0",
    "mode_fluctuations",
    "persistence",
    "persistence_lower_bound",
    "sff",
]
