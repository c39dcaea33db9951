from schema import Schema, And, Or, Optional, Use

from .constants import (
    MAX_RADIUS,
    PRESETS,
    WINDOW_MODELS,
)

SUPPORTED_ORIENTATIONS = ["x", "y", "z"]

SUPPORTED_SPACINGS = ["linear", "log"]

SUPPORTED_BAND_SOURCES = ["path", "mesh"]

NUMBER = Or(int, float)

def return_or(params=[], msg="invalid"):
    assert(len(params) > 0)

    p = ', '.join('"{0}"'.format(str(w)) for w in params)
    return f"Or({p}, error='{msg}')"

def positive(msg):
    return And(NUMBER, lambda x: x > 0, error=msg)

def non_negative(msg):
    return And(NUMBER, lambda x: x >= 0, error=msg)

def increasing_pair(msg):
    return And([NUMBER], lambda x: len(x) == 2 and x[0] < x[1], error=msg)

def position():
    return And([NUMBER], lambda x: len(x) == 3, error="wigner_seitz: positions are 3-vectors in units of a")

config_schema = Schema({
    Optional("preset_name"): Or(None, eval(return_or(params=PRESETS,
                        msg="preset_name: unknown preset"))),
    "out_dir": str,
    "lattice": {
        "a": positive("lattice.a: must be > 0"),
        "r_over_a": And(NUMBER, lambda x: 0 <= x < MAX_RADIUS,
                        error="lattice.r_over_a: must lie in [0, 0.5); larger spheres are outside the overlap range"),
        "eps_real": And(NUMBER, lambda x: x >= 1, error="lattice.eps_real: must be >= 1"),
        "eps_imag": non_negative("lattice.eps_imag: must be >= 0"),
        "eps_sphere": And(NUMBER, lambda x: x >= 1, error="lattice.eps_sphere: must be >= 1"),
        "overlap_grid": And(int, lambda x: x >= 8, error="lattice.overlap_grid: must be an int >= 8"),
    },
    "basis": {
        "count": And(int, lambda x: x >= 1, error="basis.count: must be an int >= 1"),
        "n_bands": And(int, lambda x: x >= 1, error="basis.n_bands: must be an int >= 1"),
    },
    "kmesh": {
        "resolution": And(int, lambda x: x >= 1, error="kmesh.resolution: must be an int >= 1"),
        "half_zone": bool,
    },
    "kpath": {
        "labels": And([str], lambda x: len(x) >= 2, error="kpath.labels: need at least two points"),
        "n_per_segment": And(int, lambda x: x >= 1, error="kpath.n_per_segment: must be an int >= 1"),
    },
    "bands": {
        "source": eval(return_or(params=SUPPORTED_BAND_SOURCES,
                        msg="bands.source: must be path or mesh")),
    },
    "wigner_seitz": {
        str: position(),
    },
    "ldos": {
        "position": str,
        "orientations": [eval(return_or(params=SUPPORTED_ORIENTATIONS,
                        msg="ldos.orientations: unsupported orientation"))],
        "bin_width": positive("ldos.bin_width: must be > 0"),
        "omega_range": increasing_pair("ldos.omega_range: expected [lower, upper]"),
        "fit_width": positive("ldos.fit_width: must be > 0"),
        "n_curve": And(int, lambda x: x >= 2, error="ldos.n_curve: must be an int >= 2"),
    },
    "band_edge": {
        "band": And(int, lambda x: x >= 1, error="band_edge.band: bands are counted from 1"),
        "basis_count": And(int, lambda x: x >= 1, error="band_edge.basis_count: must be an int >= 1"),
        "stencil_step": And(NUMBER, lambda x: 0 < x <= 0.1,
                        error="band_edge.stencil_step: must lie in (0, 0.1]"),
        "degeneracy_tol": positive("band_edge.degeneracy_tol: must be > 0"),
    },
    "kbe_map": {
        "path": And([str], lambda x: len(x) >= 2, error="kbe_map.path: need at least two points"),
        "n_per_segment": And(int, lambda x: x >= 1, error="kbe_map.n_per_segment: must be an int >= 1"),
        "radius_sweep": [And(NUMBER, lambda x: 0 <= x < MAX_RADIUS,
                        error="kbe_map.radius_sweep: radii must lie in [0, 0.5)")],
    },
    "emitter": {
        "beta": And(NUMBER, lambda x: x > 0, error="emitter.beta: must be > 0"),
        "omega_eg": positive("emitter.omega_eg: must be > 0"),
        "detuning": positive("emitter.detuning: must be > 0"),
        "k_be": non_negative("emitter.k_be: must be >= 0"),
        Optional("material"): Or(None, str),
    },
    "loss": {
        "delta_over_omega": [non_negative("loss.delta_over_omega: must be >= 0")],
        "alpha_labels": [Use(str)],
    },
    "dynamics": {
        "window": increasing_pair("dynamics.window: expected [lower, upper]"),
        "cutoff": positive("dynamics.cutoff: must be > 0"),
        "background": bool,
        "window_model": eval(return_or(params=WINDOW_MODELS,
                        msg="dynamics.window_model: must be band_edge or vacuum")),
        "detuning_interval": increasing_pair("dynamics.detuning_interval: expected [lower, upper]"),
        "detuning_tol": positive("dynamics.detuning_tol: must be > 0"),
        "newton_tol": positive("dynamics.newton_tol: must be > 0"),
        "max_iter": And(int, lambda x: x >= 1, error="dynamics.max_iter: must be an int >= 1"),
    },
    "decay": {
        "t_max_lifetimes": positive("decay.t_max_lifetimes: must be > 0"),
        "n_times": And(int, lambda x: x >= 2, error="decay.n_times: must be an int >= 2"),
        "spacing": eval(return_or(params=SUPPORTED_SPACINGS,
                        msg="decay.spacing: must be linear or log")),
        "span": increasing_pair("decay.span: expected [lower, upper]"),
        "n_uniform": And(int, lambda x: x >= 11, error="decay.n_uniform: must be an int >= 11"),
        "grading": And(NUMBER, lambda x: 1 < x < 2, error="decay.grading: must lie in (1, 2)"),
    },
    "df_scan": {
        "start": positive("df_scan.start: must be > 0"),
        "stop": positive("df_scan.stop: must be > 0"),
        "num": And(int, lambda x: x >= 1, error="df_scan.num: must be an int >= 1"),
    },
    "run": {
        "threads": And(int, lambda x: x >= 1, error="run.threads: must be an int >= 1"),
    },
}, ignore_extra_keys=True)
