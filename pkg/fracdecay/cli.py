import re
import sys
import logging
import argparse

from os.path import join

import numpy as np
import pandas as pd
from omegaconf import open_dict

from .base.config import flatten_config, load_config, print_config, save_config
from .base.constants import COMMANDS, EMITTER_PRESETS, PRESETS, X_POINTS
from .base.exceptions import ConfigError, InputError, NumericalError
from .base.io import write_table
from .base.parallel import ordered_map
from .dynamics.decay import decay_curve
from .dynamics.detuning import df_scan
from .dynamics.poles import EmitterSpec, find_pole
from .dynamics.spectral import SpectralModel
from .photonics.crystal import (
    LatticeSpec,
    build_kmesh,
    build_kpath,
    build_reciprocal_set,
    build_ws_path,
    volume_fraction,
    ws_point,
)
from .photonics.ldos import (
    LossModel,
    broadened_ldos,
    fit_band_edge,
    histogram_from_samples,
    sample_modes,
    solve_x_stencils,
    sqrt_law_fit,
    vacuum_ldos,
)
from .photonics.pwe import f_factor, solve_k, solve_many

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

def _slug(label):
    return re.sub(r"[^\w.+-]+", "_", str(label)).strip("_")

def _lattice(cfg):
    spec = LatticeSpec.from_config(cfg.lattice)
    return spec, build_reciprocal_set(spec, cfg.basis.count)

def _header(cfg, **results):
    meta = flatten_config(cfg)
    meta.update(results)
    return meta

def run_bands(cfg):
    spec, basis = _lattice(cfg)
    if cfg.bands.source == "path":
        points, _ = build_kpath(list(cfg.kpath.labels), cfg.kpath.n_per_segment)
    else:
        points = build_kmesh(cfg.kmesh.resolution, cfg.kmesh.half_zone).points
    solutions = solve_many(spec, points, basis, cfg.basis.n_bands, threads=cfg.run.threads)

    rows = []
    for i, sol in enumerate(solutions):
        for band, omega in enumerate(sol.omegas, start=1):
            rows.append((i, *sol.k, band, omega))
    frame = pd.DataFrame(rows, columns=["k_index", "kx", "ky", "kz", "band", "omega"])
    return [write_table(join(cfg.out_dir, "bands.dat"), frame,
                        _header(cfg, **{"basis.actual_count": basis.count}))]

def _edge_fit(cfg, spec):
    edge_basis = build_reciprocal_set(spec, cfg.band_edge.basis_count)
    fit = solve_x_stencils(spec, edge_basis, band=cfg.band_edge.band, step=cfg.band_edge.stencil_step,
                           degeneracy_tol=cfg.band_edge.degeneracy_tol, threads=cfg.run.threads)
    return fit, edge_basis

def _loss_models(cfg, spec, f, omega_be):
    """Column label and loss model of each analytic curve.

    The configured relative widths come first. An absorbing backbone adds a
    ``lattice`` curve broadened by δ = ω_BE (ε_I/ε_R) f / 2.
    """
    models = [(_slug(label), LossModel.relative(rel, omega0=omega_be))
              for rel, label in zip(cfg.loss.delta_over_omega, cfg.loss.alpha_labels)]
    if spec.eps_backbone_imag > 0:
        models.append(("lattice", LossModel.from_lattice(spec, f, omega_be)))
    return models

def run_ldos(cfg):
    spec, basis = _lattice(cfg)
    r = ws_point(cfg.ldos.position, cfg.wigner_seitz).position
    orientations = list(cfg.ldos.orientations)
    kmesh = build_kmesh(cfg.kmesh.resolution, cfg.kmesh.half_zone)
    samples = sample_modes(spec, basis, kmesh, r, orientations, cfg.basis.n_bands, threads=cfg.run.threads)

    hists = {o: histogram_from_samples(samples, o, cfg.ldos.bin_width, tuple(cfg.ldos.omega_range))
             for o in orientations}
    first = hists[orientations[0]]
    hist_frame = pd.DataFrame({"omega": first.centers})
    for o, hist in hists.items():
        hist_frame[f"rho_{o}"] = hist.scaled()

    fit, edge_basis = _edge_fit(cfg, spec)
    models = {o: fit_band_edge(fit, r, o) for o in orientations}
    edge = models[orientations[0]]
    x_solution = solve_k(spec, X_POINTS[0], edge_basis, cfg.band_edge.band)
    f = f_factor(x_solution, cfg.band_edge.band, spec)

    try:
        sqrt_fit = sqrt_law_fit(first, edge.omega_be, cfg.ldos.fit_width)
        exponent = sqrt_fit.exponent
    except NumericalError as e:
        logger.warning("square-root fit failed: %s", e)
        exponent = None

    losses = _loss_models(cfg, spec, f, edge.omega_be)
    results = {"omega_be": edge.omega_be, "f": f, "fit_exponent": exponent,
               "fill_fraction": volume_fraction(spec), "basis.actual_count": basis.count}
    for o, model in models.items():
        results[f"k_be_scaled_{o}"] = model.k_be_scaled
    for label, loss in losses:
        if label == "lattice":
            results["lattice_delta_over_omega"] = loss.relative_width
    paths = [write_table(join(cfg.out_dir, "ldos_histogram.dat"), hist_frame, _header(cfg, **results))]

    omega = np.linspace(*cfg.ldos.omega_range, cfg.ldos.n_curve)
    curves = pd.DataFrame({"omega": omega})
    for label, loss in losses:
        curves[f"rho_{label}"] = broadened_ldos(edge, loss, omega) / vacuum_ldos(omega)
    paths.append(write_table(join(cfg.out_dir, "ldos_analytic.dat"), curves, _header(cfg, **results)))
    return paths

def run_kbe_map(cfg):
    spec, _ = _lattice(cfg)
    fit, _ = _edge_fit(cfg, spec)
    positions, s = build_ws_path(list(cfg.kbe_map.path), cfg.kbe_map.n_per_segment, cfg.wigner_seitz)
    axes = ["x", "y", "z"]

    rows = []
    for dist, r in zip(s, positions):
        k = [fit_band_edge(fit, r, o).k_be_scaled for o in axes]
        rows.append((dist, *r, *k, float(np.mean(k))))
    frame = pd.DataFrame(rows, columns=["s", "x", "y", "z", "K_x", "K_y", "K_z", "K_avg"])
    meta = _header(cfg, omega_be=fit.omega_be)
    paths = [write_table(join(cfg.out_dir, "kbe_map.dat"), frame, meta)]

    h_point = ws_point("H", cfg.wigner_seitz).position
    radius_rows = []
    for r_over_a in cfg.kbe_map.radius_sweep:
        sweep_fit, _ = _edge_fit(cfg, spec.with_radius(float(r_over_a)))
        k = [fit_band_edge(sweep_fit, h_point, o).k_be_scaled for o in axes]
        radius_rows.append((r_over_a, sweep_fit.omega_be, *k))
    radius_frame = pd.DataFrame(radius_rows, columns=["r_over_a", "omega_be", "K_x", "K_y", "K_z"])
    paths.append(write_table(join(cfg.out_dir, "kbe_radius.dat"), radius_frame, meta))
    return paths

def _emitter(cfg):
    material = cfg.emitter.get("material")
    if material is not None and material not in EMITTER_PRESETS:
        raise ConfigError(f"emitter.material: unknown emitter {material!r}")
    return EmitterSpec.from_config(cfg.emitter)

def _decay_one(cfg, emitter, pair):
    rel, label = pair
    model = SpectralModel.from_config(cfg, rel)
    pole = find_pole(emitter, model, tol=cfg.dynamics.newton_tol, max_iter=cfg.dynamics.max_iter)
    t_max = cfg.decay.t_max_lifetimes / emitter.vacuum_rate
    curve = decay_curve(emitter, model, t_max, n_times=cfg.decay.n_times, pole=pole,
                        spacing=cfg.decay.spacing, span=tuple(cfg.decay.span),
                        n_uniform=cfg.decay.n_uniform, grading=cfg.decay.grading)
    frame = pd.DataFrame({"t": curve.times, "t_seconds": curve.seconds(),
                          "population": curve.population, "pole_part": curve.pole_part})
    meta = _header(cfg, alpha_label=label, delta_over_omega=rel, strength=pole.strength,
                   raw_strength=pole.raw_strength, omega0_real=pole.omega0.real,
                   omega0_imag=pole.omega0.imag, lamb_shift=pole.lamb_shift, bound=pole.bound)
    return write_table(join(cfg.out_dir, f"decay_{_slug(label)}.dat"), frame, meta)

def run_decay(cfg):
    emitter = _emitter(cfg)
    pairs = list(zip(cfg.loss.delta_over_omega, cfg.loss.alpha_labels))
    return ordered_map(lambda p: _decay_one(cfg, emitter, p), pairs, threads=cfg.run.threads)

def run_df_scan(cfg):
    emitter = _emitter(cfg)
    model = SpectralModel.from_config(cfg)
    beta_k = np.logspace(np.log10(cfg.df_scan.start), np.log10(cfg.df_scan.stop), cfg.df_scan.num)
    deltas = list(cfg.loss.delta_over_omega)
    labels = dict(zip(deltas, (_slug(l) for l in cfg.loss.alpha_labels)))
    points = df_scan(emitter, model, beta_k, deltas, interval=tuple(cfg.dynamics.detuning_interval),
                     tol=cfg.dynamics.detuning_tol, threads=cfg.run.threads)
    rows = [(p.beta_k, p.delta, labels[p.delta], p.d_f, p.detuning, int(p.limit), p.resolved) for p in points]
    frame = pd.DataFrame(rows, columns=["beta_k", "delta_over_omega", "alpha_label", "d_f", "detuning",
                                        "limit", "d_f_resolved"])
    return [write_table(join(cfg.out_dir, "df_scan.dat"), frame, _header(cfg))]

RUNNERS = {
    "bands": run_bands,
    "ldos": run_ldos,
    "kbe-map": run_kbe_map,
    "decay": run_decay,
    "df-scan": run_df_scan,
}

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="user configuration, YAML or flat 'section.key = value' text")
    common.add_argument("--preset", choices=PRESETS, help="named parameter set")
    common.add_argument("--out", help="output directory, overrides out_dir")
    common.add_argument("--threads", type=int, help="worker threads, overrides run.threads")
    common.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for detail")

    parser = argparse.ArgumentParser(prog="fracdecay",
                                     description="Fractional decay of quantum dots in inverse-opal photonic crystals")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bands": "band structure along a k-path or on the mesh",
        "ldos": "LDOS histogram and band-edge model at an emitter position",
        "kbe-map": "band-edge prefactor across the Wigner-Seitz cell and against sphere radius",
        "decay": "excited-state population for each loss width",
        "df-scan": "degree of fractional decay against the coupling product",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser

def _configure_logging(verbosity):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")

def main(argv=None):
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        cfg = load_config(preset=args.preset, cfg=args.config)
        with open_dict(cfg):
            if args.out is not None:
                cfg.out_dir = args.out
            if args.threads is not None:
                if args.threads < 1:
                    raise ConfigError("--threads: must be >= 1")
                cfg.run.threads = args.threads
        if args.dry_run:
            print_config(cfg)
            return EXIT_OK
        save_config(cfg, cfg.out_dir)
        paths = RUNNERS[args.command](cfg)
        for path in paths:
            logger.info("output written to %s", path)
    except (ConfigError, InputError) as e:
        logger.error("%s", e)
        return EXIT_INPUT
    except NumericalError as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL
    return EXIT_OK

if __name__ == "__main__":
    sys.exit(main())
