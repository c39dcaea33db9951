import logging

from dataclasses import dataclass

import numpy as np
from scipy import special

from ..base.exceptions import InputError, NumericalError
from .poles import find_pole, spectrum

logger = logging.getLogger(__name__)

FILON_TAYLOR = 1e-2
EDGE_GAP = 1e-12
POPULATION_TOL = 1e-3
CHUNK = 64

@dataclass(frozen=True)
class DecayCurve:
    """Excited-state population against time.

    ``times`` are in units of 1/ω_eg. ``amplitude`` is the excited-state
    amplitude in the frame rotating at ω_eg; ``pole_part`` is the population
    carried by the dominant pole alone.
    """
    times: np.ndarray
    population: np.ndarray
    pole_part: np.ndarray
    amplitude: np.ndarray
    omega_eg: float
    plateau: float

    def seconds(self):
        return self.times / self.omega_eg

    def lifetimes(self, beta):
        """Times in units of the vacuum lifetime 1/Γ0."""
        return self.times * 2.0 * np.pi * beta

def _graded(centre, s_min, limit, ratio):
    offsets = []
    s = s_min
    while s < limit:
        offsets.append(s)
        s *= ratio
    offsets = np.array(offsets)
    return np.concatenate([centre - offsets, [centre], centre + offsets])

def inversion_grid(model, pole, span=(0.9, 1.1), n_uniform=2001, grading=1.03):
    """Real frequency nodes for the background integral, graded toward the edge and the pole."""
    lo_t, hi_t = span
    if not lo_t < 1.0 < hi_t:
        raise InputError(f"integration span must contain 1, got {span}")
    if not grading > 1:
        raise InputError("grading ratio must be > 1")
    nodes = [np.linspace(lo_t, hi_t, n_uniform)]
    limit = 0.5 * (hi_t - lo_t)
    re0 = pole.omega0.real

    scale0 = max(abs(pole.omega0.imag), model.loss.delta)
    if not model.is_vacuum:
        scale0 = max(scale0, abs(re0 - model.edge.omega_be))
    s_pole = max(1e-3 * scale0, 1e-15)
    nodes.append(_graded(re0, s_pole, limit, grading))

    if not model.is_vacuum:
        b = model.edge.omega_be
        scale_b = max(model.loss.delta, abs(b - re0))
        nodes.append(_graded(b, max(1e-3 * scale_b, 1e-15), limit, grading))

    x = np.unique(np.clip(np.concatenate(nodes), lo_t, hi_t))
    ends = list(model.window)
    if model.background:
        ends += [0.0, model.cutoff]
    keep = np.ones(x.shape, dtype=bool)
    for e in ends:
        keep &= np.abs(x - e) > EDGE_GAP
    keep &= np.abs(x - pole.omega0) > 0.5 * s_pole
    return x[keep]

def _filon_moments(c):
    # E0 = ∫_0^1 e^{ct} dt, E1 = ∫_0^1 t e^{ct} dt
    small = np.abs(c) < FILON_TAYLOR
    safe = np.where(small, 1.0, c)
    e0 = np.where(small, 1 + c / 2 + c**2 / 6 + c**3 / 24 + c**4 / 120, (np.exp(safe) - 1.0) / safe)
    e1 = np.where(small, 0.5 + c / 3 + c**2 / 8 + c**3 / 30 + c**4 / 144,
                  (np.exp(safe) * (safe - 1.0) + 1.0) / safe**2)
    return e0, e1

def filon_transform(x, f, times):
    r"""Filon integral :math:`\int f(x)\,e^{-i\tau(x-1)}dx` of piecewise-linear ``f`` on nodes ``x``."""
    h = np.diff(x)
    u = x[:-1] - 1.0
    out = np.empty(times.shape, dtype=complex)
    for start in range(0, times.size, CHUNK):
        tau = times[start:start + CHUNK, None]
        c = -1j * tau * h[None, :]
        e0, e1 = _filon_moments(c)
        seg = h[None, :] * np.exp(-1j * tau * u[None, :]) * (f[None, :-1] * (e0 - e1) + f[None, 1:] * e1)
        out[start:start + CHUNK] = np.sum(seg, axis=1)
    return out

def _tail(amp, lower, upper, times):
    # ∫ amp/(x - 1) e^{-iτ(x-1)} dx over the frequencies outside the span
    out = np.empty(times.shape, dtype=complex)
    zero = times == 0
    out[zero] = amp * (np.log(lower / upper) - 1j * np.pi)
    t = times[~zero]
    out[~zero] = amp * (special.exp1(1j * upper * t) - special.exp1(-1j * lower * t))
    return out

def _times(t_max, n_times, spacing):
    if not t_max > 0 or n_times < 2:
        raise InputError("need t_max > 0 and n_times >= 2")
    if spacing == "linear":
        return np.linspace(0.0, t_max, n_times)
    if spacing == "log":
        return np.concatenate([[0.0], np.logspace(np.log10(t_max) - 6.0, np.log10(t_max), n_times - 1)])
    raise InputError(f"unknown time spacing {spacing!r}, expected 'linear' or 'log'")

def decay_curve(emitter, model, t_max, n_times=201, pole=None, spacing="linear", span=(0.9, 1.1),
                n_uniform=2001, grading=1.03):
    r"""Excited-state population by inverse Laplace transform of the amplitude spectrum.

    The amplitude is split into the dominant pole and a background. The pole
    is removed from the spectrum on the real axis, the remainder is integrated
    with Filon weights over ``span`` and the frequencies outside the span are
    added in closed form through exponential integrals.

    Args:
        emitter (EmitterSpec): Coupling.
        model (SpectralModel): Environment.
        t_max (float): Final time in units of 1/ω_eg.
        n_times (int): Number of output times, the first one is zero.
        pole (PoleResult): Precomputed pole, found here when None.
        spacing (str): ``"linear"`` or ``"log"`` time grid.
        span (tuple): Frequency interval integrated numerically.
        n_uniform (int): Uniform nodes across ``span`` before grading.
        grading (float): Geometric ratio of the graded nodes.

    Returns:
        (DecayCurve): Population, pole part and amplitude.
    """
    if pole is None:
        pole = find_pole(emitter, model)
    times = _times(t_max, n_times, spacing)
    a, omega0 = pole.residue, pole.omega0

    x = inversion_grid(model, pole, span=span, n_uniform=n_uniform, grading=grading)
    remainder = spectrum(emitter, model, x) - a / (x - omega0)
    if not np.all(np.isfinite(remainder)):
        raise NumericalError("non-finite spectrum on the inversion grid", diagnostics={"n_grid": x.size})

    lower, upper = 1.0 - span[0], span[1] - 1.0
    background = (filon_transform(x, remainder, times) + _tail(1j - a, lower, upper, times)) / (2.0 * np.pi)
    amplitude = -1j * a * np.exp(-1j * (omega0 - 1.0) * times) + background
    population = np.abs(amplitude)**2

    if abs(population[0] - 1.0) > POPULATION_TOL:
        raise NumericalError("initial population differs from one, refine the inversion grid",
                             diagnostics={"population0": population[0], "n_grid": x.size})
    if np.any(population > 1.0 + POPULATION_TOL):
        logger.warning("population exceeds one by %.2e", population.max() - 1.0)

    pole_part = abs(a)**2 * np.exp(2.0 * omega0.imag * times)
    logger.info("decay over %d times up to tau=%.3e on %d nodes, plateau %.6f",
                times.size, t_max, x.size, pole.strength)
    return DecayCurve(times=times, population=population, pole_part=pole_part, amplitude=amplitude,
                      omega_eg=emitter.omega_eg, plateau=pole.strength)
