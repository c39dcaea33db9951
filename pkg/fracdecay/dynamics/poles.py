import logging

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants, optimize

from ..base.constants import EMITTER_PRESETS, OMEGA_PBSE
from ..base.exceptions import InputError, NumericalError
from .spectral import g_function, g_sheet

logger = logging.getLogger(__name__)

SCAN_POINTS = 240
SCAN_FLOOR = 1e-15

@dataclass(frozen=True)
class EmitterSpec:
    """Two-level emitter in units of its transition frequency.

    Args:
        beta (float): Dimensionless coupling Γ0/(2π ω_eg).
        omega_eg (float): Transition angular frequency in s^-1, used to convert times.
        material (str): Optional name of the preset the coupling came from.
    """
    beta: float
    omega_eg: float = OMEGA_PBSE
    material: str = None

    def __post_init__(self):
        if not self.beta > 0:
            raise InputError(f"beta must be > 0, got {self.beta}")
        if not self.omega_eg > 0:
            raise InputError(f"omega_eg must be > 0, got {self.omega_eg}")

    @classmethod
    def from_preset(cls, material, omega_eg=OMEGA_PBSE):
        if material not in EMITTER_PRESETS:
            raise InputError(f"unknown emitter {material!r}, expected one of {sorted(EMITTER_PRESETS)}")
        return cls(beta=EMITTER_PRESETS[material], omega_eg=omega_eg, material=material)

    @classmethod
    def from_config(cls, cfg):
        return cls(beta=float(cfg.beta), omega_eg=float(cfg.omega_eg), material=cfg.get("material"))

    @property
    def vacuum_rate(self):
        """Vacuum decay rate Γ0 in units of ω_eg."""
        return 2.0 * np.pi * self.beta

def beta_from_dipole(p):
    r"""Coupling :math:`\beta = q^2 p^2/(6\pi^2\epsilon_0\hbar m^2 c^3)` from a momentum matrix element.

    Args:
        p (float): Interband momentum matrix element in kg m/s.
    """
    if not p > 0:
        raise InputError("momentum matrix element must be > 0")
    return (constants.e**2 * p**2
            / (6.0 * np.pi**2 * constants.epsilon_0 * constants.hbar * constants.m_e**2 * constants.c**3))

@dataclass(frozen=True)
class PoleResult:
    """Dominant pole of the emitter amplitude and its residue.

    ``omega0`` is in units of ω_eg, ``strength`` is the clamped ``|a|^2``.
    """
    omega0: complex
    residue: complex
    strength: float
    raw_strength: float
    bound: bool
    other_roots: tuple = field(default_factory=tuple)

    @property
    def lamb_shift(self):
        return self.omega0.real - 1.0

    @property
    def decay_rate(self):
        """Intensity decay rate of the pole, -2 Im omega0."""
        return -2.0 * self.omega0.imag

def characteristic(emitter, model, omega, derivative=False):
    r"""Denominator :math:`\beta G(\omega) - i(\omega-1)` of the amplitude spectrum, on the connected sheet."""
    if derivative:
        return emitter.beta * g_sheet(model, omega, derivative=True) - 1j
    return emitter.beta * g_sheet(model, omega) - 1j * (omega - 1.0)

def spectrum(emitter, model, omega):
    """Amplitude spectrum on the physical sheet, real or upper half-plane ``omega``."""
    return 1.0 / (emitter.beta * g_function(model, omega) - 1j * (np.asarray(omega) - 1.0))

def residue(emitter, model, omega0):
    return 1.0 / characteristic(emitter, model, omega0, derivative=True)

def contour_residue(emitter, model, centre, radius, n_points=64):
    """Residue of the amplitude spectrum from a trapezoidal contour integral on the connected sheet."""
    if not radius > 0:
        raise InputError("radius must be > 0")
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    ring = np.exp(1j * theta)
    values = np.array([1.0 / characteristic(emitter, model, centre + radius * z) for z in ring])
    return complex(radius * np.mean(values * ring))

def _lossless_model(model):
    return model if model.loss.delta == 0.0 else model.with_loss(0.0)

def edge_shift(emitter, model):
    """Imaginary part of the loss-free kernel at the band edge, times beta."""
    lossless = _lossless_model(model)
    return emitter.beta * float(np.imag(g_function(lossless, complex(model.edge.omega_be))))

def _local_pole(emitter, model):
    # square-root singular part of the kernel near the edge, the rest frozen at the edge
    b = model.edge.omega_be
    delta = model.loss.delta
    a_coef = emitter.beta * np.pi * model.edge.k_be / (2.0 * b)
    detune = b - 1.0 - edge_shift(emitter, model)
    if delta == 0.0 and -a_coef**2 < detune < 0:
        raise NumericalError("pole is a virtual state on the unphysical sheet",
                             diagnostics={"detuning": b, "threshold_gap": detune, "a2": a_coef**2})
    s = -1j * a_coef + np.sqrt(complex(-a_coef**2 - detune, delta))
    return b - 1j * delta + s**2

def _gap_roots(emitter, model):
    b = model.edge.omega_be
    lo = model.window[0]
    beta = emitter.beta

    def h(d):
        w = b - d
        return beta * float(np.imag(g_function(model, complex(w)))) - (w - 1.0)

    span = 0.999 * (b - lo)
    distances = np.logspace(np.log10(SCAN_FLOOR), np.log10(span), SCAN_POINTS)
    values = np.array([h(d) for d in distances])
    roots = []
    for j in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        d = optimize.brentq(h, distances[j], distances[j + 1], xtol=1e-30, rtol=4 * np.finfo(float).eps)
        roots.append(b - d)
    return roots

def _newton(emitter, model, seed, tol, max_iter):
    omega = complex(seed)
    value = characteristic(emitter, model, omega)
    for it in range(max_iter):
        slope = characteristic(emitter, model, omega, derivative=True)
        step = -value / slope
        lam = 1.0
        accepted = None
        for _ in range(60):
            trial = omega + lam * step
            try:
                trial_value = characteristic(emitter, model, trial)
            except NumericalError:
                lam *= 0.5
                continue
            accepted = (trial, trial_value)
            if abs(trial_value) < abs(value) or abs(lam * step) < tol:
                break
            lam *= 0.5
        if accepted is None:
            raise NumericalError("pole search stalled on the branch cut", diagnostics={"omega": omega})
        omega, value = accepted
        logger.debug("newton %d: omega=%s |D|=%.3e", it, omega, abs(value))
        if abs(lam * step) < tol:
            return omega
    raise NumericalError("pole search did not converge",
                         diagnostics={"omega": omega, "residual": abs(value), "iterations": max_iter})

def _result(emitter, model, omega0, bound, others=()):
    a = residue(emitter, model, omega0)
    raw = float(abs(a)**2)
    strength = raw
    if raw > 1.0:
        if raw > 1.0 + 1e-6:
            logger.warning("pole strength %.8f exceeds one, clamping", raw)
        strength = 1.0
    return PoleResult(omega0=complex(omega0), residue=complex(a), strength=strength, raw_strength=raw,
                      bound=bound, other_roots=tuple(others))

def find_pole(emitter, model, tol=1e-14, max_iter=100):
    """Locate the pole of the amplitude spectrum that governs the long-time decay.

    Without loss and with the edge inside the window the gap is scanned for a
    real bound state first. Otherwise Newton iteration on the connected sheet
    starts from a local square-root model of the edge, or from the golden-rule
    estimate for a vacuum window.

    Args:
        emitter (EmitterSpec): Coupling.
        model (SpectralModel): Environment.
        tol (float): Step size at which Newton iteration stops.
        max_iter (int): Iteration limit.

    Returns:
        (PoleResult): Pole, residue and strength.
    """
    if model.edge_inside():
        if model.loss.delta == 0.0:
            roots = _gap_roots(emitter, model)
            if roots:
                roots.sort(key=lambda w: abs(w - 1.0))
                if len(roots) > 1:
                    logger.info("additional real roots in the gap: %s", roots[1:])
                return _result(emitter, model, roots[0], bound=True, others=roots[1:])
        seed = _local_pole(emitter, model)
    else:
        seed = 1.0 - 1j * emitter.beta * complex(g_function(model, 1.0))

    omega0 = _newton(emitter, model, seed, tol, max_iter)
    if omega0.imag > tol:
        raise NumericalError("pole found above the real axis", diagnostics={"omega": omega0})
    return _result(emitter, model, omega0, bound=omega0.imag == 0.0)

def fractional_strength(emitter, model, **kwargs):
    """Clamped ``|a|^2`` of the dominant pole, the long-time population."""
    return find_pole(emitter, model, **kwargs).strength
