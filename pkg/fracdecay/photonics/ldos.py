import logging

from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from scipy import integrate

from ..base.constants import EDGE_BAND, ORIENTATIONS, X_POINTS
from ..base.exceptions import InputError, NumericalError
from ..base.parallel import ordered_map
from .pwe import ZERO_OMEGA, inverse_epsilon, solve_k

logger = logging.getLogger(__name__)

def vacuum_ldos(omega):
    r"""Free-space LDOS per polarisation :math:`\rho_0 = 4\hat\omega^2/3` in the histogram units."""
    return 4.0 * np.asarray(omega, dtype=float)**2 / 3.0

def resolve_orientation(e_p):
    """Unit dipole vector from a label (x, y, z), a 3-vector, or None for the trace."""
    if e_p is None:
        return None
    if isinstance(e_p, str):
        if e_p not in ORIENTATIONS:
            raise InputError(f"unknown orientation {e_p!r}, expected one of {sorted(ORIENTATIONS)}")
        return np.array(ORIENTATIONS[e_p])
    e_p = np.asarray(e_p, dtype=float)
    norm = np.linalg.norm(e_p)
    if e_p.shape != (3,) or norm == 0:
        raise InputError("orientation must be a non-zero 3-vector")
    return e_p / norm

def _projected_intensity(field, e_p):
    if e_p is None:
        return np.sum(np.abs(field)**2, axis=-1)
    return np.abs(field @ e_p)**2

@dataclass(frozen=True)
class LdosHistogram:
    """Projected LDOS sampled on frequency bins (units 2πc/a).

    ``values`` are in units where the vacuum LDOS is ``4 ω^2 / 3``. The
    orientation is None for the trace over dipole directions.
    """
    bin_edges: np.ndarray
    values: np.ndarray
    position: tuple
    orientation: tuple = None

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    def integrated(self):
        """Total weight, ``sum(values * 2π * width)``."""
        return float(np.sum(self.values * 2.0 * np.pi * self.widths))

    def scaled(self):
        """Values divided by the vacuum LDOS at each bin centre."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.centers > 0, self.values / vacuum_ldos(self.centers), 0.0)

@dataclass(frozen=True)
class ModeSamples:
    """Frequencies and projected field intensities of the mesh modes at one position.

    ``intensities`` has shape (n_orientations, n_k, n_bands); ``trace`` holds
    the sum over Cartesian directions.
    """
    omegas: np.ndarray
    weights: np.ndarray
    intensities: np.ndarray
    trace: np.ndarray
    orientations: tuple
    position: tuple
    cell_volume: float

    def intensity(self, e_p):
        if e_p is None:
            return self.trace
        e_p = resolve_orientation(e_p)
        for i, o in enumerate(self.orientations):
            if np.allclose(o, e_p):
                return self.intensities[i]
        raise InputError(f"orientation {tuple(e_p)} was not sampled")

def _sample_solution(solution, r, orientations):
    n_bands = solution.n_bands
    inten = np.zeros((len(orientations), n_bands))
    trace = np.zeros(n_bands)
    for band in range(1, n_bands + 1):
        if solution.omegas[band - 1] <= ZERO_OMEGA:
            continue
        field = solution.mode_field(band)(r)
        trace[band - 1] = _projected_intensity(field, None)
        for i, o in enumerate(orientations):
            inten[i, band - 1] = _projected_intensity(field, o)
    return solution.omegas, inten, trace

def _sample_k(spec, basis, n_bands, eps_inverse, r, orientations, k):
    solution = solve_k(spec, k, basis, n_bands, eps_inverse=eps_inverse)
    return _sample_solution(solution, r, orientations)

def _collect(results, kmesh, r, orientations, cell_volume):
    omegas = np.array([res[0] for res in results])
    inten = np.stack([res[1] for res in results], axis=1)
    trace = np.array([res[2] for res in results])
    return ModeSamples(omegas=omegas, weights=np.asarray(kmesh.weights), intensities=inten, trace=trace,
                       orientations=tuple(tuple(o) for o in orientations),
                       position=tuple(float(x) for x in r), cell_volume=cell_volume)

def sample_modes(spec, basis, kmesh, r, orientations=("x", "y", "z"), n_bands=12, threads=1):
    """Solve every mesh point and keep only what the LDOS at ``r`` needs.

    Args:
        spec (LatticeSpec): Geometry.
        basis (ReciprocalSet): Plane-wave basis.
        kmesh (KMesh): Integration mesh.
        r (array-like): Emitter position in units of a.
        orientations (sequence): Dipole orientations to project on.
        n_bands (int): Bands per wavevector.
        threads (int): Worker threads.

    Returns:
        (ModeSamples): Frequencies, weights and intensities.
    """
    r = np.asarray(r, dtype=float)
    orients = [resolve_orientation(o) for o in orientations]
    eta = inverse_epsilon(spec, basis)
    func = partial(_sample_k, spec, basis, n_bands, eta, r, orients)
    logger.info("sampling %d wavevectors x %d bands at r=%s", len(kmesh), n_bands, tuple(r))
    results = ordered_map(func, list(kmesh.points), threads=threads)
    return _collect(results, kmesh, r, orients, spec.cell_volume)

def samples_from_solutions(solutions, kmesh, r, orientations=("x", "y", "z")):
    if len(solutions) != len(kmesh):
        raise InputError(f"{len(solutions)} solutions for {len(kmesh)} mesh points")
    r = np.asarray(r, dtype=float)
    orients = [resolve_orientation(o) for o in orientations]
    results = [_sample_solution(s, r, orients) for s in solutions]
    volume = solutions[0].cell_volume if solutions else 0.25
    return _collect(results, kmesh, r, orients, volume)

def histogram_from_samples(samples, e_p, bin_width, omega_range=None):
    """Bin mode samples into an LDOS histogram.

    Each mode contributes ``V w |e_p . E(r)|^2 / (2π Δω)`` to the bin holding
    its frequency. Zero-frequency modes and modes outside ``omega_range`` are
    dropped.
    """
    if not bin_width > 0:
        raise InputError("bin_width must be > 0")
    omegas = samples.omegas
    if omega_range is None:
        omega_range = (0.0, float(omegas.max()) * (1.0 + 1e-12) + bin_width)
    lo, hi = omega_range
    if not hi > lo:
        raise InputError("omega_range must be increasing")
    n_bins = int(np.ceil((hi - lo) / bin_width - 1e-9))
    edges = lo + bin_width * np.arange(n_bins + 1)

    weight = samples.weights[:, None] * samples.intensity(e_p)
    idx = np.floor((omegas - lo) / bin_width).astype(int)
    keep = (omegas > ZERO_OMEGA) & (idx >= 0) & (idx < n_bins)
    sums = np.bincount(idx[keep], weights=weight[keep], minlength=n_bins)
    values = samples.cell_volume * sums / (2.0 * np.pi * bin_width)
    orient = None if e_p is None else tuple(resolve_orientation(e_p))
    return LdosHistogram(bin_edges=edges, values=values, position=samples.position, orientation=orient)

def ldos_histogram(r, e_p, band_solutions, kmesh, bin_width, omega_range=None):
    """LDOS histogram at position ``r`` for dipole orientation ``e_p`` (None for the trace)."""
    orientations = [] if e_p is None else [e_p]
    samples = samples_from_solutions(band_solutions, kmesh, r, orientations)
    return histogram_from_samples(samples, e_p, bin_width, omega_range)

@dataclass(frozen=True)
class SqrtLawFit:
    exponent: float
    k_be: float
    n_bins: int

def sqrt_law_fit(hist, omega_be, width):
    r"""Fit :math:`\rho \propto (\omega-\omega_{BE})^p` just above a band edge.

    The fit runs on the cumulative histogram, which is smoother than the bins
    themselves: :math:`N(x) = C x^{p+1}` gives exponent ``p`` and prefactor
    ``C (p + 1)``.

    Returns:
        (SqrtLawFit): Exponent, prefactor in histogram units and bins used.
    """
    edges = hist.bin_edges
    start = int(np.searchsorted(edges, omega_be, side="right")) - 1
    if start < 0 or start >= len(hist.values):
        raise InputError(f"omega_be={omega_be} outside the histogram range")
    upper = edges[start + 1:]
    mass = np.cumsum(hist.values[start:] * hist.widths[start:])
    x = upper - omega_be
    sel = (x > 0) & (x <= width) & (mass > 0)
    if np.count_nonzero(sel) < 3:
        raise NumericalError("too few populated bins above the band edge",
                             diagnostics={"omega_be": omega_be, "width": width})
    slope, intercept = np.polyfit(np.log(x[sel]), np.log(mass[sel]), 1)
    return SqrtLawFit(exponent=float(slope - 1.0), k_be=float(np.exp(intercept) * slope),
                      n_bins=int(np.count_nonzero(sel)))

@dataclass(frozen=True)
class EdgePocket:
    """Band extremum at one X point with its curvature and degenerate fields."""
    k_point: tuple
    omega: float
    curvature: np.ndarray
    modes: tuple

    def weight(self, r, e_p=None):
        e_p = resolve_orientation(e_p)
        return float(sum(_projected_intensity(m(np.asarray(r, dtype=float)), e_p) for m in self.modes))

@dataclass(frozen=True)
class BandEdgeFit:
    band: int
    step: float
    pockets: tuple
    cell_volume: float

    @property
    def omega_be(self):
        return min(p.omega for p in self.pockets)

@dataclass(frozen=True)
class BandEdgeModel:
    r"""Square-root LDOS :math:`\rho(\omega) = K\sqrt{\omega-\omega_{BE}}` above the edge.

    ``k_be`` is in the units of ``omega_be`` and of the LDOS it was fitted to.
    ``k_be_scaled`` is the same edge in the dimensionless units of the emitter
    dynamics, where frequencies are divided by ``omega_be`` and the LDOS by the
    vacuum value there.
    """
    omega_be: float
    k_be: float
    k_be_scaled: float
    curvatures: tuple = ()

    def __post_init__(self):
        if self.k_be < 0:
            raise InputError("k_be must be >= 0")

    @classmethod
    def dimensionless(cls, omega_be, k_be):
        """Band edge already expressed in emitter units (frequencies over ω_eg)."""
        return cls(omega_be=float(omega_be), k_be=float(k_be), k_be_scaled=float(k_be))

    def scaled(self, omega_be=1.0):
        return BandEdgeModel(omega_be=omega_be, k_be=self.k_be_scaled, k_be_scaled=self.k_be_scaled,
                             curvatures=self.curvatures)

    def with_edge(self, omega_be=None, k_be=None):
        kw = {}
        if omega_be is not None:
            kw["omega_be"] = float(omega_be)
        if k_be is not None:
            kw["k_be"] = float(k_be)
            kw["k_be_scaled"] = float(k_be)
        return replace(self, **kw)

    def density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.k_be * np.sqrt(np.clip(omega - self.omega_be, 0.0, None))

def _stencil_offsets(step):
    return np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * step

def _pocket(spec, basis, band, step, degeneracy_tol, eps_inverse, n_bands, x_point):
    x_point = np.asarray(x_point, dtype=float)
    centre = solve_k(spec, x_point, basis, n_bands, eps_inverse=eps_inverse)
    omega0 = float(centre.omegas[band - 1])

    curvature = np.zeros((3, 3))
    for axis in range(3):
        f = []
        for off in _stencil_offsets(step):
            if off == 0.0:
                f.append(omega0)
                continue
            k = x_point.copy()
            k[axis] += off
            f.append(float(solve_k(spec, k, basis, n_bands, eps_inverse=eps_inverse).omegas[band - 1]))
        f = np.array(f)
        curvature[axis, axis] = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12.0 * step**2)

    degenerate = [n for n in range(1, n_bands + 1)
                  if abs(centre.omegas[n - 1] - omega0) <= degeneracy_tol * omega0]
    if len(degenerate) > 1:
        logger.info("band %d is %d-fold degenerate at X=%s: bands %s",
                    band, len(degenerate), tuple(x_point), degenerate)
    modes = tuple(centre.mode_field(n) for n in degenerate)
    return EdgePocket(k_point=tuple(x_point), omega=omega0, curvature=curvature, modes=modes)

def solve_x_stencils(spec, basis, band=EDGE_BAND, step=0.01, degeneracy_tol=1e-6, threads=1):
    """Solve the band around each of the three X points and fit the curvature.

    Args:
        spec (LatticeSpec): Geometry.
        basis (ReciprocalSet): Plane-wave basis, ideally larger than for the histogram.
        band (int): 1-based band whose minimum at X forms the edge.
        step (float): Finite-difference step in units of 2π/a.
        degeneracy_tol (float): Relative tolerance grouping bands degenerate at X.
        threads (int): Worker threads, one pocket each.

    Returns:
        (BandEdgeFit): Pockets with their curvature tensors and edge fields.
    """
    if not 0 < step <= 0.1:
        raise InputError(f"stencil step must be in (0, 0.1], got {step}")
    if int(band) != band or band < 1:
        raise InputError(f"band must be a positive integer, got {band}")
    n_bands = int(band) + 2
    eta = inverse_epsilon(spec, basis)
    func = partial(_pocket, spec, basis, int(band), step, degeneracy_tol, eta, n_bands)
    pockets = ordered_map(func, X_POINTS, threads=threads)

    omegas = np.array([p.omega for p in pockets])
    if np.ptp(omegas) > 1e-8 * omegas.mean():
        logger.warning("X pockets disagree on the band edge: %s", omegas)
    return BandEdgeFit(band=int(band), step=step, pockets=tuple(pockets), cell_volume=spec.cell_volume)

def fit_band_edge(edge_fit, r, e_p=None):
    r"""Effective-mass square-root prefactor of the LDOS at ``r``.

    Each pocket with curvature :math:`A` and field weight :math:`W` adds
    :math:`V\,4\pi\sqrt{2}\,W/((2\pi)^{3/2}\sqrt{\det A})` to the prefactor in
    physical frequency units.

    Args:
        edge_fit (BandEdgeFit): Output of :func:`solve_x_stencils`.
        r (array-like): Emitter position in units of a.
        e_p: Dipole orientation, or None for the trace.

    Returns:
        (BandEdgeModel): Edge frequency in units of 2πc/a and prefactors.
    """
    omega_be = edge_fit.omega_be
    prefactor = 0.0
    for pocket in edge_fit.pockets:
        det = np.linalg.det(pocket.curvature)
        if not np.all(np.diag(pocket.curvature) > 0) or not det > 0:
            raise NumericalError("band curvature at X is not positive definite",
                                 diagnostics={"k": pocket.k_point, "diag": tuple(np.diag(pocket.curvature))})
        prefactor += pocket.weight(r, e_p) / np.sqrt(det)
    k_phys = edge_fit.cell_volume * 4.0 * np.pi * np.sqrt(2.0) / (2.0 * np.pi)**1.5 * prefactor

    # histogram units use ω in 2πc/a
    k_be = k_phys * np.sqrt(2.0 * np.pi)
    k_be_scaled = k_be * np.sqrt(omega_be) / vacuum_ldos(omega_be)
    return BandEdgeModel(omega_be=float(omega_be), k_be=float(k_be), k_be_scaled=float(k_be_scaled),
                         curvatures=tuple(p.curvature for p in edge_fit.pockets))

def band_edge_model(spec, basis, r, e_p=None, band=EDGE_BAND, step=0.01, degeneracy_tol=1e-6, threads=1):
    edge_fit = solve_x_stencils(spec, basis, band=band, step=step, degeneracy_tol=degeneracy_tol,
                                threads=threads)
    return fit_band_edge(edge_fit, r, e_p)

@dataclass(frozen=True)
class LossModel:
    """Lorentzian broadening of half width ``delta`` around frequency ``omega0``."""
    delta: float = 0.0
    f: float = 1.0
    eps_ratio: float = 0.0
    omega0: float = 1.0

    def __post_init__(self):
        if self.delta < 0:
            raise InputError("loss delta must be >= 0")

    @classmethod
    def from_lattice(cls, spec, f, omega0):
        return cls(delta=loss_delta(spec, f, omega0), f=f, eps_ratio=spec.eps_ratio, omega0=omega0)

    @classmethod
    def relative(cls, delta_over_omega, omega0=1.0):
        return cls(delta=float(delta_over_omega) * omega0, omega0=omega0)

    @property
    def relative_width(self):
        return self.delta / self.omega0

def loss_delta(spec, f, omega0):
    r"""Half width :math:`\delta = \omega_0\,(\epsilon_I/\epsilon_R)\,f/2` of the mode broadening."""
    if not 0 < f <= 1:
        raise InputError(f"f must lie in (0, 1], got {f}")
    return float(omega0 * spec.eps_ratio * f / 2.0)

def _broadened_quad(k_be, omega_be, delta, omega):
    # in units of delta, the Lorentzian peak sits at u0
    u0 = (omega - omega_be) / delta
    peak = max(u0, 0.0)
    f = lambda u: np.sqrt(u) / ((u0 - u)**2 + 1.0)
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    total = 0.0
    if peak > 0:
        total += integrate.quad(f, 0.0, peak, **opts)[0]
    total += integrate.quad(f, peak, peak + 50.0, **opts)[0]
    total += integrate.quad(f, peak + 50.0, np.inf, **opts)[0]
    return k_be * np.sqrt(delta) * total / np.pi

def broadened_ldos(model, loss, omega, method="closed"):
    r"""Square-root LDOS convolved with a Lorentzian of half width ``loss.delta``.

    The closed form is :math:`K\,\mathrm{Re}\sqrt{\omega-\omega_{BE}+i\delta}`. With
    ``method="quad"`` the convolution is integrated numerically instead.
    """
    omega = np.asarray(omega, dtype=float)
    delta = loss.delta
    if delta == 0.0:
        return model.density(omega)
    if method == "closed":
        return model.k_be * np.sqrt((omega - model.omega_be + 1j * delta).astype(complex)).real
    if method == "quad":
        flat = [_broadened_quad(model.k_be, model.omega_be, delta, w) for w in omega.ravel()]
        return np.array(flat).reshape(omega.shape)
    raise InputError(f"unknown method {method!r}, expected 'closed' or 'quad'")

def broadened_ldos_slope(model, loss, omega):
    """Derivative of :func:`broadened_ldos` with respect to frequency."""
    omega = np.asarray(omega, dtype=float)
    w = (omega - model.omega_be + 1j * loss.delta).astype(complex)
    if loss.delta == 0.0:
        out = np.zeros_like(omega)
        above = omega > model.omega_be
        out[above] = 0.5 * model.k_be / np.sqrt(omega[above] - model.omega_be)
        return out
    return (0.5 * model.k_be / np.sqrt(w)).real

def _sqrt_lower(w):
    # the branch of sqrt(w - c1) reached by crossing the real axis above the branch point
    root = np.sqrt(w)
    flip = (w.real < 0) & (w.imag < 0)
    return np.where(flip, -root, root)

def continued_ldos(model, loss, omega, derivative=False):
    r"""Continuation of the broadened LDOS from the real axis into the lower half plane.

    .. math::
        \rho_{an}(\omega) = \frac{K}{2}\left[\sqrt{\omega-\omega_{BE}+i\delta}^{\,\prime}
        + \sqrt{\omega-\omega_{BE}-i\delta}\right]

    where the primed root is continued across the real axis rather than taken on
    its principal branch. On the real axis this equals :func:`broadened_ldos`.
    """
    omega = np.asarray(omega, dtype=complex)
    if np.all(omega.imag == 0):
        real = omega.real
        if derivative:
            return broadened_ldos_slope(model, loss, real).astype(complex)
        return broadened_ldos(model, loss, real).astype(complex)

    w1 = omega - (model.omega_be - 1j * loss.delta)
    w2 = omega - (model.omega_be + 1j * loss.delta)
    s1, s2 = _sqrt_lower(w1), np.sqrt(w2)
    if derivative:
        return 0.25 * model.k_be * (1.0 / s1 + 1.0 / s2)
    return 0.5 * model.k_be * (s1 + s2)
