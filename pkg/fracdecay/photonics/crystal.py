import logging
import functools

from dataclasses import dataclass, replace

import numpy as np

from ..base.constants import (
    BZ_VOLUME,
    CELL_VOLUME,
    FCC_SITES,
    HIGH_SYMMETRY_K,
    MAX_RADIUS,
    TOUCHING_RADIUS,
    WS_ALIASES,
    WS_POINTS,
)
from ..base.exceptions import InputError

logger = logging.getLogger(__name__)

# primitive reciprocal vectors of the FCC lattice, units of 2π/a
FCC_RECIPROCAL = np.array([[-1.0, 1.0, 1.0],
                           [1.0, -1.0, 1.0],
                           [1.0, 1.0, -1.0]])

@dataclass(frozen=True)
class LatticeSpec:
    r"""FCC inverse opal: air spheres on the FCC sites of a dielectric backbone.

    Lengths are in units of the cubic lattice constant, so all outputs scale with ``a``.

    Args:
        a (float): Cubic lattice constant.
        r_over_a (float): Sphere radius per lattice constant. Spheres touch at :math:`1/(2\sqrt{2})`.
        eps_backbone_real (float): Real relative permittivity :math:`\epsilon_R` of the backbone.
        eps_backbone_imag (float): Imaginary part :math:`\epsilon_I \geq 0`. Only used for the loss width.
        eps_sphere (float): Permittivity inside the spheres.
        overlap_grid (int): Points per axis of the real-space grid used for overlapping spheres.
    """
    a: float = 1.0
    r_over_a: float = 0.3436
    eps_backbone_real: float = 11.76
    eps_backbone_imag: float = 0.0
    eps_sphere: float = 1.0
    overlap_grid: int = 64

    def __post_init__(self):
        if not self.a > 0:
            raise InputError("lattice constant must be > 0")
        if not 0 <= self.r_over_a < MAX_RADIUS:
            raise InputError(f"r_over_a={self.r_over_a} outside the overlap range [0, {MAX_RADIUS})")
        if self.eps_backbone_real < 1:
            raise InputError("eps_backbone_real must be >= 1")
        if self.eps_backbone_imag < 0:
            raise InputError("eps_backbone_imag must be >= 0")

    @classmethod
    def from_config(cls, cfg):
        return cls(a=float(cfg.a),
                   r_over_a=float(cfg.r_over_a),
                   eps_backbone_real=float(cfg.eps_real),
                   eps_backbone_imag=float(cfg.eps_imag),
                   eps_sphere=float(cfg.eps_sphere),
                   overlap_grid=int(cfg.overlap_grid))

    @property
    def overlapping(self):
        return self.r_over_a > TOUCHING_RADIUS

    @property
    def eps_ratio(self):
        return self.eps_backbone_imag / self.eps_backbone_real

    @property
    def cell_volume(self):
        """Primitive cell volume in units of a^3."""
        return CELL_VOLUME

    def with_radius(self, r_over_a):
        return replace(self, r_over_a=r_over_a)

@dataclass(frozen=True)
class ReciprocalSet:
    """Plane-wave basis: reciprocal lattice vectors in units of 2π/a, shell complete.

    ``indices`` holds the integer coordinates, ``g_vectors`` the same as floats.
    """
    indices: np.ndarray

    @property
    def g_vectors(self):
        return self.indices.astype(float)

    @property
    def count(self):
        return int(self.indices.shape[0])

    @property
    def max_component(self):
        return int(np.abs(self.indices).max()) if self.count else 0

    def __len__(self):
        return self.count

@dataclass(frozen=True)
class KMesh:
    """Bloch wavevectors in units of 2π/a with integration weights summing to the BZ volume."""
    points: np.ndarray
    weights: np.ndarray
    half_zone: bool = False

    def __len__(self):
        return int(self.points.shape[0])

    @property
    def total_weight(self):
        return float(np.sum(self.weights))

@dataclass(frozen=True)
class WignerSeitzPoint:
    label: str
    position: tuple

def _fcc_reciprocal_box(n):
    r = np.arange(-n, n + 1)
    h, k, l = np.meshgrid(r, r, r, indexing="ij")
    idx = np.stack([h.ravel(), k.ravel(), l.ravel()], axis=-1)
    parity = idx % 2
    same = (parity[:, 0] == parity[:, 1]) & (parity[:, 1] == parity[:, 2])
    return idx[same]

def _is_reciprocal(idx, g):
    if not np.allclose(g, idx, atol=1e-9):
        return False
    parity = idx % 2
    return bool(np.all((parity[:, 0] == parity[:, 1]) & (parity[:, 1] == parity[:, 2])))

def build_reciprocal_set(spec, target_count):
    """Smallest shell-complete set of FCC reciprocal vectors with at least ``target_count`` members.

    Vectors are ordered by length, then lexicographically, so ``G = 0`` comes first.

    Args:
        spec (LatticeSpec): Lattice the basis belongs to.
        target_count (int): Requested number of plane waves.

    Returns:
        (ReciprocalSet): The basis. ``count`` may exceed the request so that no shell is split.
    """
    if int(target_count) != target_count or target_count < 1:
        raise InputError(f"target_count must be an integer >= 1, got {target_count}")
    target_count = int(target_count)

    n = 1
    while True:
        idx = _fcc_reciprocal_box(n)
        norms = np.sum(idx**2, axis=1)
        order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], norms))
        idx, norms = idx[order], norms[order]
        # every vector with |G|^2 <= n^2 lies inside the box
        if np.count_nonzero(norms <= n * n) >= target_count:
            cut = norms[target_count - 1]
            count = int(np.searchsorted(norms, cut, side="right"))
            basis = idx[:count].copy()
            basis.setflags(write=False)
            logger.debug("basis of %d plane waves (requested %d), |G|^2 <= %d", count, target_count, cut)
            return ReciprocalSet(indices=basis)
        n += 1

def _sphere_form_factor(u):
    u = np.asarray(u, dtype=float)
    out = np.ones_like(u)
    big = u > 1e-4
    ub = u[big]
    out[big] = 3.0 * (np.sin(ub) - ub * np.cos(ub)) / ub**3
    out[~big] = 1.0 - u[~big]**2 / 10.0
    return out

def inside_spheres(spec, points):
    """Boolean mask of points (units of a, any shape (..., 3)) lying inside an air sphere."""
    points = np.asarray(points, dtype=float)
    inside = np.zeros(points.shape[:-1], dtype=bool)
    r2 = spec.r_over_a**2
    for site in FCC_SITES:
        d = points - site
        d -= np.rint(d)
        inside |= np.sum(d**2, axis=-1) < r2
    return inside

@functools.lru_cache(maxsize=8)
def _indicator_coefficients(r_over_a, n):
    x = (np.arange(n) + 0.5) / n
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    grid = np.stack([X, Y, Z], axis=-1)
    mask = inside_spheres(LatticeSpec(r_over_a=r_over_a), grid)
    coeffs = np.fft.fftn(mask.astype(float)) / n**3
    coeffs.setflags(write=False)
    return coeffs

def sphere_indicator_fourier(spec, idx):
    """Fourier coefficients of the sphere indicator for integer reciprocal vectors ``idx`` (M, 3)."""
    idx = np.atleast_2d(np.asarray(idx, dtype=int))
    if spec.r_over_a == 0:
        return np.zeros(idx.shape[0])
    if not spec.overlapping:
        f_v = 16.0 * np.pi / 3.0 * spec.r_over_a**3
        u = 2.0 * np.pi * spec.r_over_a * np.sqrt(np.sum(idx**2, axis=1))
        return f_v * _sphere_form_factor(u)

    n = spec.overlap_grid
    if 2 * np.abs(idx).max() >= n:
        raise InputError(f"overlap_grid={n} too coarse for reciprocal vectors up to {np.abs(idx).max()}")
    coeffs = _indicator_coefficients(spec.r_over_a, n)
    raw = coeffs[idx[:, 0] % n, idx[:, 1] % n, idx[:, 2] % n]
    # midpoint sampling shifts every coefficient by half a grid step
    shift = np.exp(-1j * np.pi * np.sum(idx, axis=1) / n)
    return np.real(raw * shift)

def epsilon_fourier(spec, g):
    r"""Fourier coefficient :math:`\epsilon(\mathbf{G})` of the inverse-opal permittivity.

    Uses the analytic sphere form factor below the touching radius and a
    real-space FFT of the sphere indicator above it. The backbone permittivity
    is complex, :math:`\epsilon_R + i\epsilon_I`.

    Args:
        spec (LatticeSpec): Geometry and permittivities.
        g (array-like): Reciprocal vector(s) in units of 2π/a, shape (3,) or (M, 3).

    Returns:
        (complex or numpy.ndarray): Coefficient(s).
    """
    g = np.asarray(g, dtype=float)
    single = g.ndim == 1
    g = np.atleast_2d(g)
    idx = np.rint(g).astype(int)
    if not _is_reciprocal(idx, g):
        raise InputError("g is not a vector of the FCC reciprocal lattice")
    if spec.overlapping:
        logger.warning("spheres overlap at r_over_a=%.4f, using a %d^3 real-space grid",
                       spec.r_over_a, spec.overlap_grid)

    eps_b = complex(spec.eps_backbone_real, spec.eps_backbone_imag)
    chi = sphere_indicator_fourier(spec, idx)
    zero = np.all(idx == 0, axis=1)
    coeffs = eps_b * zero + (spec.eps_sphere - eps_b) * chi
    return coeffs[0] if single else coeffs

def _difference_indices(basis):
    idx = basis.indices
    return idx[:, None, :] - idx[None, :, :]

def indicator_matrix(spec, basis):
    """Matrix of sphere-indicator coefficients over basis differences, chi(G_i - G_j)."""
    diff = _difference_indices(basis)
    n = basis.count
    return sphere_indicator_fourier(spec, diff.reshape(-1, 3)).reshape(n, n)

def epsilon_matrix(spec, basis, lossless=True):
    r"""Matrix :math:`\epsilon(\mathbf{G}_i-\mathbf{G}_j)` over the basis.

    With ``lossless`` the backbone enters with :math:`\epsilon_R` only, which is
    what the eigenproblem uses.
    """
    if spec.overlapping:
        logger.warning("spheres overlap at r_over_a=%.4f, using a %d^3 real-space grid",
                       spec.r_over_a, spec.overlap_grid)
    eps_b = spec.eps_backbone_real if lossless else complex(spec.eps_backbone_real, spec.eps_backbone_imag)
    chi = indicator_matrix(spec, basis)
    return eps_b * np.eye(basis.count) + (spec.eps_sphere - eps_b) * chi

def volume_fraction(spec):
    """Air-sphere volume fraction of the cell."""
    if not spec.overlapping:
        return 16.0 * np.pi / 3.0 * spec.r_over_a**3
    return float(sphere_indicator_fourier(spec, np.zeros((1, 3), dtype=int))[0])

@functools.lru_cache(maxsize=1)
def _folding_candidates():
    r = np.arange(-2, 3)
    h, k, l = np.meshgrid(r, r, r, indexing="ij")
    idx = np.stack([h.ravel(), k.ravel(), l.ravel()], axis=-1)
    parity = idx % 2
    same = (parity[:, 0] == parity[:, 1]) & (parity[:, 1] == parity[:, 2])
    return idx[same].astype(float)

def fold_to_zone(points):
    """Map wavevectors (units 2π/a) into the first Brillouin zone by subtracting the nearest G."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cands = _folding_candidates()
    d2 = np.sum((points[:, None, :] - cands[None, :, :])**2, axis=-1)
    return points - cands[np.argmin(d2, axis=1)]

def in_first_zone(points, tol=1e-10):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    cands = _folding_candidates()
    d2 = np.sum((points[:, None, :] - cands[None, :, :])**2, axis=-1)
    return np.all(np.sum(points**2, axis=1)[:, None] <= d2 + tol, axis=1)

def build_kmesh(resolution, half_zone=False):
    """Uniform Monkhorst-Pack mesh folded into the first Brillouin zone.

    The fractional coordinates are ``m / (2n)`` with ``m = -(n-1), ..., n-1`` in
    steps of two along each primitive reciprocal vector. With ``half_zone`` only
    the index triples that are lexicographically positive are kept (plus the
    origin when ``n`` is odd) and their weights doubled, so no pair ``k, -k``
    appears and the weight sum is unchanged.

    Args:
        resolution (int): Points per primitive direction.
        half_zone (bool): Use time-reversal symmetry to halve the mesh.

    Returns:
        (KMesh): Points and weights, weights summing to 4 (2π/a)^3.
    """
    if int(resolution) != resolution or resolution < 1:
        raise InputError(f"resolution must be an integer >= 1, got {resolution}")
    n = int(resolution)
    m = np.arange(-(n - 1), n, 2)
    m1, m2, m3 = np.meshgrid(m, m, m, indexing="ij")
    mi = np.stack([m1.ravel(), m2.ravel(), m3.ravel()], axis=-1)
    weights = np.full(mi.shape[0], BZ_VOLUME / n**3)

    if half_zone:
        first = np.zeros(mi.shape[0], dtype=int)
        for col in range(2, -1, -1):
            nz = mi[:, col] != 0
            first[nz] = np.sign(mi[nz, col])
        origin = np.all(mi == 0, axis=1)
        keep = (first > 0) | origin
        mi, weights = mi[keep], weights[keep]
        weights[~origin[keep]] *= 2.0

    frac = mi / (2.0 * n)
    points = fold_to_zone(frac @ FCC_RECIPROCAL)
    points.setflags(write=False)
    weights.setflags(write=False)
    logger.debug("k-mesh %d^3, %d points, half_zone=%s", n, points.shape[0], half_zone)
    return KMesh(points=points, weights=weights, half_zone=half_zone)

def _resolve_ws_label(label):
    return WS_ALIASES.get(label, label)

def ws_point(label, table=None):
    """Named point of the rhombic-dodecahedral Wigner-Seitz cell, position in units of a.

    Args:
        label (str): One of Γ (alias G), H, P, N, or any key of ``table``.
        table (dict): Optional label to position override, e.g. the
            ``wigner_seitz`` config section.
    """
    points = dict(WS_POINTS)
    if table is not None:
        points.update({_resolve_ws_label(str(k)): tuple(float(x) for x in v) for k, v in table.items()})
    key = _resolve_ws_label(label)
    if key not in points:
        raise InputError(f"unknown Wigner-Seitz label {label!r}, expected one of {sorted(points)}")
    return WignerSeitzPoint(label=key, position=tuple(points[key]))

def high_symmetry_k(label):
    """High-symmetry point of the FCC Brillouin zone in units of 2π/a."""
    key = WS_ALIASES.get(label, label)
    if key not in HIGH_SYMMETRY_K:
        raise InputError(f"unknown Brillouin-zone label {label!r}, expected one of {sorted(HIGH_SYMMETRY_K)}")
    return np.array(HIGH_SYMMETRY_K[key])

def polyline(vertices, n_per_segment):
    """Points along straight segments joining ``vertices`` and their cumulative path length.

    Each segment contributes ``n_per_segment`` points without its end, the last
    vertex is appended.
    """
    vertices = [np.asarray(v, dtype=float) for v in vertices]
    points, dist = [], []
    offset = 0.0
    for start, end in zip(vertices[:-1], vertices[1:]):
        ts = np.linspace(0.0, 1.0, n_per_segment, endpoint=False)
        length = float(np.linalg.norm(end - start))
        points.append(start[None, :] + ts[:, None] * (end - start)[None, :])
        dist.append(offset + ts * length)
        offset += length
    points.append(vertices[-1][None, :])
    dist.append(np.array([offset]))
    return np.concatenate(points, axis=0), np.concatenate(dist)

def build_kpath(labels, n_per_segment=20):
    """Bloch wavevectors along a path of Brillouin-zone labels, e.g. Γ-X-W-L-Γ-K."""
    return polyline([high_symmetry_k(l) for l in labels], n_per_segment)

def build_ws_path(labels, n_per_segment=10, table=None):
    """Real-space emitter positions along a path of Wigner-Seitz labels, e.g. Γ-H-P-Γ-N-H."""
    return polyline([ws_point(l, table).position for l in labels], n_per_segment)
