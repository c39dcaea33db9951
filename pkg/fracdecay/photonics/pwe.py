import logging

from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import linalg
from scipy.stats import qmc

from ..base.exceptions import InputError, NumericalError
from ..base.parallel import ordered_map
from .crystal import ReciprocalSet, epsilon_matrix, indicator_matrix, inside_spheres

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
NEGATIVE_TOL = 1e-12
ZERO_OMEGA = 1e-6

@dataclass(frozen=True)
class BlochProblem:
    """Hermitian eigenproblem of the magnetic field at one Bloch wavevector.

    The operator acts on the two transverse amplitudes of each plane wave,
    ordered ``(G_0, λ=1), (G_0, λ=2), (G_1, λ=1), ...``. Its eigenvalues are
    ``ω^2`` in units of ``(2πc/a)^2``.
    """
    k: np.ndarray
    q: np.ndarray
    polarizations: np.ndarray
    eps_inverse: np.ndarray
    operator: np.ndarray

    @property
    def dimension(self):
        return int(self.operator.shape[0])

@dataclass(frozen=True)
class ModeField:
    """Normalised electric field of a single Bloch mode.

    ``e_of_r`` takes positions in units of a, shape (3,) or (M, 3), and returns
    the complex field with the same leading shape. The field is normalised so
    that the integral of ``E* . D`` over a primitive cell of volume
    ``normalization_volume`` is one.
    """
    e_of_r: object
    normalization_volume: float
    omega: float

    def __call__(self, r):
        return self.e_of_r(r)

@dataclass(frozen=True)
class BandSolution:
    """Lowest bands at one wavevector.

    ``omegas`` are in units of 2πc/a, 1-based band ``n`` is ``omegas[n - 1]``.
    ``h_coeffs`` has shape (count, 2, n_bands) and holds the transverse
    magnetic-field amplitudes along ``polarizations``.
    """
    k: np.ndarray
    q: np.ndarray
    omegas: np.ndarray
    h_coeffs: np.ndarray
    polarizations: np.ndarray
    eps_inverse: np.ndarray
    cell_volume: float

    @property
    def n_bands(self):
        return int(self.omegas.shape[0])

    def _column(self, band):
        if int(band) != band or not 1 <= band <= self.n_bands:
            raise InputError(f"band must be in 1..{self.n_bands}, got {band}")
        return int(band) - 1

    def coefficients(self, band):
        """Normalised plane-wave coefficients (E_G, D_G), each of shape (count, 3)."""
        j = self._column(band)
        omega = self.omegas[j]
        if omega <= ZERO_OMEGA:
            raise InputError(f"band {band} has zero frequency at k={tuple(self.k)}, no field")
        h = np.einsum("gl,glc->gc", self.h_coeffs[:, :, j], self.polarizations)
        d = -np.cross(self.q, h) / omega
        e = self.eps_inverse @ d
        norm = self.cell_volume * np.real(np.vdot(e, d))
        if not norm > 0:
            raise NumericalError("non-positive field energy", diagnostics={"band": band, "norm": norm})
        scale = 1.0 / np.sqrt(norm)
        return e * scale, d * scale

    def mode_field(self, band):
        e, _ = self.coefficients(band)
        return ModeField(e_of_r=partial(_evaluate, self.q, e),
                         normalization_volume=self.cell_volume,
                         omega=float(self.omegas[int(band) - 1]))

def _evaluate(q, coeffs, r):
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    r = np.atleast_2d(r)
    phases = np.exp(2j * np.pi * (r @ q.T))
    field = phases @ coeffs
    return field[0] if single else field

def polarization_vectors(q):
    """Two unit vectors transverse to each row of ``q`` (shape (count, 2, 3)).

    ``ê1`` is ``q × ẑ`` normalised (``q × x̂`` when ``q`` lies close to z) and
    ``ê2 = q̂ × ê1``. At ``q = 0`` the pair is ``x̂, ŷ``.
    """
    q = np.atleast_2d(q)
    norms = np.linalg.norm(q, axis=1)
    zero = norms < 1e-14
    qhat = np.zeros_like(q)
    qhat[~zero] = q[~zero] / norms[~zero, None]

    ref = np.tile([0.0, 0.0, 1.0], (q.shape[0], 1))
    ref[np.abs(qhat[:, 2]) > 0.9] = [1.0, 0.0, 0.0]
    e1 = np.cross(qhat, ref)
    e1_norm = np.linalg.norm(e1, axis=1)
    e1[~zero] /= e1_norm[~zero, None]
    e2 = np.cross(qhat, e1)

    e1[zero] = [1.0, 0.0, 0.0]
    e2[zero] = [0.0, 1.0, 0.0]
    return np.stack([e1, e2], axis=1)

def inverse_epsilon(spec, basis):
    """Inverse of the permittivity matrix over the basis, checked for conditioning."""
    eps = epsilon_matrix(spec, basis, lossless=True)
    try:
        cond = np.linalg.cond(eps)
        eta = linalg.inv(eps)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"permittivity matrix inversion failed: {e}",
                             diagnostics={"count": basis.count}) from None
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError("permittivity matrix is ill-conditioned",
                             diagnostics={"cond": f"{cond:.3e}", "count": basis.count})
    return eta

def assemble(spec, k, basis, eps_inverse=None):
    r"""Build the Hermitian Bloch operator at wavevector ``k``.

    The entries are :math:`\eta_{ij}\,\mathbf{v}_{i\lambda}\cdot\mathbf{v}_{j\lambda'}` with
    :math:`\eta` the inverse permittivity matrix and
    :math:`\mathbf{v}_{i\lambda} = (\mathbf{k}+\mathbf{G}_i)\times\hat{e}_{i\lambda}`.

    Args:
        spec (LatticeSpec): Geometry and permittivities.
        k (array-like): Bloch wavevector in units of 2π/a.
        basis (ReciprocalSet): Plane-wave basis.
        eps_inverse (numpy.ndarray): Precomputed inverse permittivity matrix, shared across k.

    Returns:
        (BlochProblem): Operator of dimension ``2 * basis.count``.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (3,):
        raise InputError(f"k must be a 3-vector, got shape {k.shape}")
    if eps_inverse is None:
        eps_inverse = inverse_epsilon(spec, basis)

    q = k[None, :] + basis.g_vectors
    pol = polarization_vectors(q)
    v = np.cross(q[:, None, :], pol).reshape(-1, 3)
    eta = np.repeat(np.repeat(eps_inverse, 2, axis=0), 2, axis=1)
    op = eta * (v @ v.T)
    op = 0.5 * (op + op.conj().T)
    return BlochProblem(k=k, q=q, polarizations=pol, eps_inverse=eps_inverse, operator=op)

def eigensolve(problem, n_bands, cell_volume=0.25):
    """Lowest ``n_bands`` eigenpairs of a Bloch operator.

    Args:
        problem (BlochProblem): Assembled operator.
        n_bands (int): Number of bands to keep.
        cell_volume (float): Primitive cell volume used for field normalisation.

    Returns:
        (BandSolution): Frequencies sorted ascending with their magnetic-field amplitudes.
    """
    dim = problem.dimension
    if int(n_bands) != n_bands or not 1 <= n_bands <= dim:
        raise InputError(f"n_bands must be in 1..{dim}, got {n_bands}")
    n_bands = int(n_bands)
    try:
        lam, vec = linalg.eigh(problem.operator, subset_by_index=[0, n_bands - 1])
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigensolver failed: {e}", diagnostics={"k": tuple(problem.k)}) from None

    scale = max(float(np.max(np.abs(lam))), 1.0)
    if lam[0] < -NEGATIVE_TOL * scale:
        raise NumericalError("negative eigenvalue of the Bloch operator",
                             diagnostics={"k": tuple(problem.k), "lambda": lam[0]})
    omegas = np.sqrt(np.clip(lam, 0.0, None))
    h = vec.reshape(-1, 2, n_bands)
    return BandSolution(k=problem.k, q=problem.q, omegas=omegas, h_coeffs=h,
                        polarizations=problem.polarizations, eps_inverse=problem.eps_inverse,
                        cell_volume=cell_volume)

def solve_k(spec, k, basis, n_bands, eps_inverse=None):
    problem = assemble(spec, k, basis, eps_inverse=eps_inverse)
    return eigensolve(problem, n_bands, cell_volume=spec.cell_volume)

def solve_many(spec, kpoints, basis, n_bands, threads=1, eps_inverse=None):
    """Solve a list of wavevectors, returning solutions in input order."""
    if eps_inverse is None:
        eps_inverse = inverse_epsilon(spec, basis)
    func = partial(solve_k, spec, basis=basis, n_bands=n_bands, eps_inverse=eps_inverse)
    return ordered_map(func, list(np.atleast_2d(kpoints)), threads=threads)

def reconstruct_field(solution, band, r):
    """Electric field of ``band`` at real-space positions ``r`` (units of a)."""
    e, _ = solution.coefficients(band)
    return _evaluate(solution.q, e, r)

def inner_product(solution, band_a, band_b, n_grid=None):
    r"""Real-space :math:`\int_V \mathbf{E}_a^*\cdot\mathbf{D}_b\,dV` over a primitive cell.

    The grid is fine enough to integrate products of two fields exactly, so
    the result is one for ``band_a == band_b`` and zero otherwise up to rounding.
    """
    e_a, _ = solution.coefficients(band_a)
    _, d_b = solution.coefficients(band_b)
    if n_grid is None:
        span = np.max(np.abs(np.rint(solution.q - solution.k[None, :])))
        n_grid = int(2 * span + 2)
    x = np.arange(n_grid) / n_grid
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    r = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    field_a = _evaluate(solution.q, e_a, r)
    field_b = _evaluate(solution.q, d_b, r)
    # the conventional cube holds four primitive cells
    return solution.cell_volume * np.mean(np.sum(field_a.conj() * field_b, axis=1))

def f_factor(solution, band, spec):
    r"""Backbone share of the mode's electric energy.

    .. math::
        f = \frac{\epsilon_b\int_C|\mathbf{E}|^2}{\epsilon_b\int_C|\mathbf{E}|^2 + \epsilon_s\int_S|\mathbf{E}|^2}

    Evaluated exactly in the plane-wave basis from the sphere indicator matrix.
    """
    eps_b, eps_s = spec.eps_backbone_real, spec.eps_sphere
    if eps_b == eps_s:
        return 1.0
    e, _ = solution.coefficients(band)
    n = e.shape[0]
    idx = np.rint(solution.q - solution.k[None, :]).astype(int)

    chi = indicator_matrix(spec, ReciprocalSet(indices=idx))
    if chi.shape != (n, n):
        raise NumericalError("basis mismatch in f_factor", diagnostics={"count": n})

    total = solution.cell_volume * float(np.sum(np.abs(e)**2))
    spheres = solution.cell_volume * float(np.real(np.einsum("ic,ij,jc->", e.conj(), chi, e)))
    backbone = total - spheres
    return eps_b * backbone / (eps_b * backbone + eps_s * spheres)

def f_factor_monte_carlo(solution, band, spec, n_points=2**17, seed=0, chunk=8192):
    """Sampling estimate of :func:`f_factor` from scrambled Sobol points in the unit cube."""
    if n_points < 2:
        raise InputError("n_points must be >= 2")
    m = int(np.ceil(np.log2(n_points)))
    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    points = sampler.random_base2(m)

    e, _ = solution.coefficients(band)
    backbone = spheres = 0.0
    for start in range(0, points.shape[0], chunk):
        r = points[start:start + chunk]
        intensity = np.sum(np.abs(_evaluate(solution.q, e, r))**2, axis=1)
        mask = inside_spheres(spec, r)
        spheres += float(np.sum(intensity[mask]))
        backbone += float(np.sum(intensity[~mask]))
    eps_b, eps_s = spec.eps_backbone_real, spec.eps_sphere
    return eps_b * backbone / (eps_b * backbone + eps_s * spheres)
