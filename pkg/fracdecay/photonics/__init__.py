from .crystal import *
from .pwe import *
from .ldos import *
__all__ = ["LatticeSpec", "ReciprocalSet", "KMesh", "WignerSeitzPoint", "build_reciprocal_set",
           "epsilon_fourier", "epsilon_matrix", "indicator_matrix", "volume_fraction", "build_kmesh",
           "fold_to_zone", "ws_point", "high_symmetry_k", "build_kpath", "build_ws_path",
           "BlochProblem", "BandSolution", "ModeField", "assemble", "eigensolve", "solve_k", "solve_many",
           "inverse_epsilon", "reconstruct_field", "inner_product", "f_factor", "f_factor_monte_carlo",
           "LdosHistogram", "ModeSamples", "SqrtLawFit", "EdgePocket", "BandEdgeFit", "BandEdgeModel",
           "LossModel", "vacuum_ldos", "sample_modes", "histogram_from_samples", "ldos_histogram",
           "sqrt_law_fit", "solve_x_stencils", "fit_band_edge", "band_edge_model", "loss_delta",
           "broadened_ldos", "broadened_ldos_slope", "continued_ldos"]
