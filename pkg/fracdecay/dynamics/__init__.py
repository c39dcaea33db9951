from .spectral import *
from .poles import *
from .decay import *
from .detuning import *
__all__ = ["SpectralModel", "g_function", "g_derivative", "analytic_continuation",
           "continuation_derivative", "g_sheet", "cauchy_integral", "vacuum_g", "purcell_rate",
           "EmitterSpec", "PoleResult", "beta_from_dipole", "find_pole", "fractional_strength",
           "spectrum", "residue", "characteristic", "contour_residue", "edge_shift",
           "DecayCurve", "decay_curve", "inversion_grid", "filon_transform",
           "DetuningOptimum", "DfPoint", "optimize_detuning", "bound_state_threshold", "df_scan"]
