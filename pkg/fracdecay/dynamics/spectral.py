r"""Memory kernel of a two-level emitter coupled to a structured continuum.

All quantities are dimensionless: frequencies are divided by the emitter
transition frequency and the LDOS by its vacuum value there, so the vacuum
LDOS is :math:`\tilde\omega^2`. The kernel

.. math::
    G(\omega) = i\omega\int_0^{C}\frac{\tilde\rho(x)}{x^2(\omega-x)}\,dx

is evaluated on the physical sheet (``Im ω >= 0``) by quadrature and continued
into the lower half plane through the analytic continuation of the LDOS.
"""
import logging

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ..base.constants import CUTOFF, WINDOW_LO, WINDOW_HI, WINDOW_BAND_EDGE, WINDOW_VACUUM
from ..base.exceptions import InputError, NumericalError
from ..photonics.ldos import BandEdgeModel, LossModel, broadened_ldos, broadened_ldos_slope, continued_ldos

logger = logging.getLogger(__name__)

GL_NODES = 32
GRADING = 10.0
FLOOR = 1e-15
NODE_ULPS = 64
EPS = np.finfo(float).eps
ENDPOINT_TOL = 1e-15

@lru_cache(maxsize=1)
def _gauss_legendre():
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    return 0.5 * (x + 1.0), 0.5 * w

@dataclass(frozen=True)
class SpectralModel:
    """Scaled LDOS of the emitter environment.

    Inside ``window`` the LDOS is either the broadened band edge or the
    vacuum law. Outside it follows the vacuum law up to ``cutoff`` when
    ``background`` is set and vanishes otherwise.

    Args:
        edge (BandEdgeModel): Square-root edge in scaled units, None for a vacuum window.
        loss (LossModel): Broadening of the edge, ``delta`` in units of ω_eg.
        window (tuple): Frequency interval handled by quadrature.
        cutoff (float): Upper frequency cutoff.
        background (bool): Whether the vacuum LDOS fills the rest of ``[0, cutoff]``.
    """
    edge: BandEdgeModel = None
    loss: LossModel = LossModel()
    window: tuple = (WINDOW_LO, WINDOW_HI)
    cutoff: float = CUTOFF
    background: bool = True

    def __post_init__(self):
        lo, hi = self.window
        if not 0 < lo < hi < self.cutoff:
            raise InputError(f"need 0 < window[0] < window[1] < cutoff, got window={self.window}, "
                             f"cutoff={self.cutoff}")

    @classmethod
    def band_edge(cls, detuning, k_be, delta_over_omega=0.0, **kwargs):
        """Band edge at ``detuning`` (edge frequency over ω_eg) with scaled prefactor ``k_be``."""
        return cls(edge=BandEdgeModel.dimensionless(detuning, k_be),
                   loss=LossModel.relative(delta_over_omega), **kwargs)

    @classmethod
    def vacuum(cls, **kwargs):
        return cls(edge=None, **kwargs)

    @classmethod
    def from_config(cls, cfg, delta_over_omega=0.0):
        dyn = cfg.dynamics
        kwargs = dict(window=tuple(float(x) for x in dyn.window), cutoff=float(dyn.cutoff),
                      background=bool(dyn.background))
        if dyn.window_model == WINDOW_VACUUM:
            return cls.vacuum(loss=LossModel.relative(delta_over_omega), **kwargs)
        return cls.band_edge(cfg.emitter.detuning, cfg.emitter.k_be, delta_over_omega, **kwargs)

    @property
    def is_vacuum(self):
        return self.edge is None

    @property
    def window_model(self):
        return WINDOW_VACUUM if self.is_vacuum else WINDOW_BAND_EDGE

    def with_edge(self, detuning=None, k_be=None):
        if self.is_vacuum:
            raise InputError("a vacuum window has no band edge")
        return replace(self, edge=self.edge.with_edge(omega_be=detuning, k_be=k_be))

    def with_loss(self, delta):
        return replace(self, loss=replace(self.loss, delta=float(delta)))

    def edge_inside(self):
        return not self.is_vacuum and self.window[0] < self.edge.omega_be < self.window[1]

    def window_density(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_vacuum:
            return x**2
        return broadened_ldos(self.edge, self.loss, x)

    def density(self, x):
        """Scaled LDOS on the real axis."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.window
        outside = x**2 if self.background else np.zeros_like(x)
        outside = np.where((x >= 0) & (x <= self.cutoff), outside, 0.0)
        inside = (x > lo) & (x < hi)
        return np.where(inside, self.window_density(np.where(inside, x, 1.0)), outside)

    def analytic_density(self, omega, derivative=False):
        """Continuation of the LDOS to complex ``omega`` from the real segment below it."""
        lo, hi = self.window
        re = omega.real
        if lo < re < hi:
            if self.is_vacuum:
                return 2.0 * omega if derivative else omega**2
            return complex(continued_ldos(self.edge, self.loss, omega, derivative=derivative))
        if self.background and 0 < re < self.cutoff:
            return 2.0 * omega if derivative else omega**2
        return 0.0j

def _log_above(z):
    # principal log, with real negative arguments taken from above
    if z.imag == 0 and z.real < 0:
        return complex(np.log(-z.real), np.pi)
    return np.log(complex(z))

def _segment_log(omega, a, c):
    return _log_above(omega - a) - _log_above(omega - c)

def _segment_inv(omega, a, c):
    return 1.0 / (omega - a) - 1.0 / (omega - c)

def _graded_breakpoints(lo, hi, features):
    points = [lo, hi]
    span = hi - lo
    for centre, scale in features:
        points.append(centre)
        s = scale
        while s < span:
            points.extend((centre - s, centre + s))
            s *= GRADING
    points = np.clip(np.array(points), lo, hi)
    return np.unique(points)

def _min_width(centre, scale):
    # panels narrower than a few ulp of their centre collapse onto it
    return max(scale, FLOOR, NODE_ULPS * EPS * abs(centre))

def _window_panels(model, omega):
    """Breakpoints in offsets from an anchor, the band edge or else ``Re omega``.

    Offsets keep full relative precision at the edge, where the LDOS varies on
    scales far below the spacing of floats near one.
    """
    lo, hi = model.window
    re = omega.real
    anchor = re if model.is_vacuum else model.edge.omega_be
    w = complex(re - anchor, omega.imag)
    features = []
    spread = abs(omega.imag)
    if not model.is_vacuum:
        features.append((0.0, _min_width(0.0, model.loss.delta)))
        spread = max(spread, 0.1 * abs(w.real))
    features.append((w.real, _min_width(w.real, spread)))
    return _graded_breakpoints(lo - anchor, hi - anchor, features), anchor, w

def _panel_integral(func, w, breaks, edge_at_zero):
    t, wt = _gauss_legendre()
    total = 0.0j
    for left, right in zip(breaks[:-1], breaks[1:]):
        h = right - left
        if edge_at_zero and left == 0.0:
            # u = h t^2 absorbs the square-root onset
            u = h * t**2
            jac = 2.0 * h * t * wt
        else:
            u = left + h * t
            jac = h * wt
        den = w - u
        hit = den == 0
        # a node on a real omega carries the removable point of the subtracted integrand
        total += np.sum(np.where(hit, 0.0, func(u) * jac / np.where(hit, 1.0, den)))
    return total

def _window_functions(model, anchor):
    if model.is_vacuum:
        return (lambda u: np.ones_like(u)), (lambda u: np.zeros_like(u))
    edge = replace(model.edge, omega_be=0.0)
    rho = lambda u: broadened_ldos(edge, model.loss, u)
    g = lambda u: rho(u) / (anchor + u)**2
    dg = lambda u: (broadened_ldos_slope(edge, model.loss, u) - 2.0 * rho(u) / (anchor + u)) / (anchor + u)**2
    return g, dg

def _window_integral(model, omega, derivative=False):
    lo, hi = model.window
    breaks, anchor, w = _window_panels(model, omega)
    g, dg = _window_functions(model, anchor)
    edge_at_zero = not model.is_vacuum

    h = dg if derivative else g
    if lo < omega.real < hi:
        ref = float(h(np.array([w.real]))[0])
        result = _panel_integral(lambda u: h(u) - ref, w, breaks, edge_at_zero) + ref * _segment_log(omega, lo, hi)
    else:
        result = _panel_integral(h, w, breaks, edge_at_zero)
    if derivative:
        g_lo, g_hi = float(g(np.array([lo - anchor]))[0]), float(g(np.array([hi - anchor]))[0])
        result -= g_hi / (omega - hi) - g_lo / (omega - lo)
    return result

def _background_integral(model, omega, derivative=False):
    if not model.background:
        return 0.0j
    lo, hi = model.window
    segment = _segment_inv if derivative else _segment_log
    return segment(omega, 0.0, lo) + segment(omega, hi, model.cutoff)

def _check_endpoints(model, omega):
    if omega.imag != 0:
        return
    lo, hi = model.window
    ends = [lo, hi]
    if model.background:
        ends += [0.0, model.cutoff]
    for e in ends:
        if abs(omega.real - e) <= ENDPOINT_TOL * max(1.0, abs(e)):
            raise InputError(f"G is singular at the segment endpoint omega={e}")

def cauchy_integral(model, omega, derivative=False):
    r"""Integral :math:`I(\omega)=\int\tilde\rho(x)/(x^2(\omega-x))\,dx` (or its derivative) at any omega off the support."""
    omega = complex(omega)
    _check_endpoints(model, omega)
    return _background_integral(model, omega, derivative) + _window_integral(model, omega, derivative)

def _as_scalar_or_array(func, omega):
    arr = np.asarray(omega)
    if arr.ndim == 0:
        return func(complex(arr))
    return np.array([func(complex(w)) for w in arr.ravel()]).reshape(arr.shape)

def _g_int(model, omega, derivative=False):
    if derivative:
        return 1j * cauchy_integral(model, omega) + 1j * omega * cauchy_integral(model, omega, derivative=True)
    return 1j * omega * cauchy_integral(model, omega)

def _g_upper(model, omega, derivative=False):
    if omega.imag < 0:
        raise InputError(f"the physical sheet needs Im omega >= 0, got {omega}")
    return _g_int(model, omega, derivative)

def g_function(model, omega):
    """Memory kernel on the physical sheet, scalar or array of ``omega`` with ``Im >= 0``.

    Real ``omega`` gives the limit from above.
    """
    return _as_scalar_or_array(lambda w: _g_upper(model, w), omega)

def g_derivative(model, omega):
    return _as_scalar_or_array(lambda w: _g_upper(model, w, derivative=True), omega)

def _check_cut(model, omega):
    if model.is_vacuum or not model.edge_inside():
        return
    if omega.real == model.edge.omega_be and omega.imag <= -model.loss.delta:
        raise NumericalError("omega lies on the branch cut of the continued kernel",
                             diagnostics={"omega": omega, "omega_be": model.edge.omega_be})

def _g_lower(model, omega, derivative=False):
    if omega.imag >= 0:
        raise InputError(f"analytic_continuation needs Im omega < 0, got {omega}")
    _check_cut(model, omega)
    rho = model.analytic_density(omega)
    if derivative:
        drho = model.analytic_density(omega, derivative=True)
        return _g_int(model, omega, True) + 2.0 * np.pi * (drho / omega - rho / omega**2)
    return _g_int(model, omega) + 2.0 * np.pi * rho / omega

def analytic_continuation(model, omega):
    r"""Kernel continued into ``Im omega < 0`` across the real axis directly above.

    .. math::
        G_{II}(\omega) = G_{I}(\omega) + 2\pi\tilde\rho_{an}(\omega)/\omega
    """
    return _as_scalar_or_array(lambda w: _g_lower(model, w), omega)

def continuation_derivative(model, omega):
    return _as_scalar_or_array(lambda w: _g_lower(model, w, derivative=True), omega)

def g_sheet(model, omega, derivative=False):
    """Kernel on the sheet reached from the physical region: ``G`` above the axis, its continuation below."""
    def one(w):
        if w.imag >= 0:
            return _g_upper(model, w, derivative)
        return _g_lower(model, w, derivative=derivative)
    return _as_scalar_or_array(one, omega)

def vacuum_g(omega, cutoff=CUTOFF):
    r"""Closed form :math:`\pi\omega + i\omega\ln(\omega/(C-\omega))` of the vacuum kernel on the real axis."""
    omega = np.asarray(omega, dtype=float)
    return np.pi * omega + 1j * omega * np.log(omega / (cutoff - omega))

def purcell_rate(model, omega=1.0):
    """Golden-rule rate relative to vacuum, the scaled LDOS at ``omega``."""
    return float(model.density(np.array([omega]))[0] / omega**2)
