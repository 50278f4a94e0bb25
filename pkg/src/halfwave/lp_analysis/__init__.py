"""Littlewood-Paley, modulation and space-time norm machinery."""
from .bilinear import (
    MultiplierSymbol,
    angle_symbol,
    bilinear_multiplier,
    product_bound_probe,
    random_field,
    symbol_bound,
    unit_symbol,
    write_probe_csv,
)
from .norms import (
    NormReport,
    besov_data_norm,
    besov_norm,
    data_norm,
    default_pairs,
    dimension_note,
    is_admissible,
    n_norm,
    s_norm,
    saturating_q,
    strichartz_norm,
    strichartz_weight,
    write_norm_report_csv,
    xsb_norm,
)
from .orthogonality import OrthogonalityReport, orthogonality_check, sigma_decay, trilinear_band_mass
from .partition import DyadicPartition, chi, lp_bands, lp_project, spectral_tail
from .probes import EnergyProbeRow, energy_inequality_probe, write_energy_probe_csv
from .spacetime import (
    MIN_FRAMES,
    SpaceTimeSpectrum,
    cone_part,
    hann_window,
    modulation_bands,
    modulation_mass,
    modulation_project,
    space_time_transform,
    window_leakage,
    windowed_frames,
)

__all__ = [name for name in dir() if not name.startswith("_")]
