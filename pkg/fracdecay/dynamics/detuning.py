import math
import logging

from functools import partial
from typing import NamedTuple

import numpy as np
from scipy import optimize

from ..base.exceptions import InputError, NumericalError
from ..base.parallel import ordered_map
from .poles import edge_shift, find_pole

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi

MAX_WIDENINGS = 3
MAX_SECTIONS = 200

class DetuningOptimum(NamedTuple):
    """Result of :func:`optimize_detuning`.

    ``limit`` marks a loss-free ``d_f`` that is the value approached at the
    threshold rather than one attained at a resolvable detuning. ``resolved``
    is the smallest strength at a detuning at least ``tol`` inside the threshold.
    """
    d_f: float
    detuning: float
    threshold: float
    limit: bool = False
    resolved: float = np.nan

class DfPoint(NamedTuple):
    beta_k: float
    delta: float
    d_f: float
    detuning: float
    limit: bool = False
    resolved: float = np.nan

def golden_section(strength, lo, hi, tol=1e-5):
    """Minimise a unimodal strength over edge offsets in ``[lo, hi]``.

    The bracket is shrunk by the golden ratio until it is narrower than ``tol``.
    Each strength costs a pole search, so evaluations are cached and the best
    offset visited is returned with its strength.
    """
    lo, hi = sorted((lo, hi))
    seen = {}

    def value(offset):
        if offset not in seen:
            seen[offset] = strength(offset)
        return seen[offset]

    left, right = hi - INV_PHI * (hi - lo), lo + INV_PHI * (hi - lo)
    for _ in range(MAX_SECTIONS):
        if hi - lo <= tol:
            break
        if value(left) < value(right):
            hi, right = right, left
            left = hi - INV_PHI * (hi - lo)
        else:
            lo, left = left, right
            right = lo + INV_PHI * (hi - lo)
    if not seen:
        value(0.5 * (lo + hi))
    best = min(seen, key=seen.get)
    return best, seen[best]

def _edge_model(model, offset):
    return model.with_edge(detuning=1.0 - offset)

def _strength(emitter, model, offset):
    try:
        return find_pole(emitter, _edge_model(model, offset)).strength
    except NumericalError as e:
        logger.debug("no pole at offset %.6e: %s", offset, e)
        return np.inf

def bound_state_threshold(emitter, model, interval):
    r"""Edge offset :math:`\epsilon^* = 1-\omega_{BE}` at which a loss-free bound state appears.

    Solves :math:`\epsilon + \beta\,\mathrm{Im}\,G(\omega_{BE}) = 0` for the loss-free model.
    """
    lossless = model.with_loss(0.0)
    d_lo, d_hi = interval
    phi = lambda eps: eps + edge_shift(emitter, _edge_model(lossless, eps))
    e_lo, e_hi = 1.0 - d_hi, 1.0 - d_lo
    f_lo, f_hi = phi(e_lo), phi(e_hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NumericalError("no bound-state threshold inside the detuning interval",
                             diagnostics={"interval": tuple(interval), "phi": (f_lo, f_hi)})
    return optimize.brentq(phi, e_lo, e_hi, xtol=1e-18, rtol=4 * np.finfo(float).eps)

def _scan_offsets(centre, delta, e_lo, e_hi):
    top = math.log10(max(e_hi - centre, centre - e_lo))
    bottom = math.log10(delta) - 2.0
    powers = 10.0**np.arange(bottom, top + 0.25, 0.5)
    grid = np.concatenate([[centre], centre - powers, centre + powers])
    grid = grid[(grid >= e_lo) & (grid <= e_hi)]
    return np.unique(grid)

def optimize_detuning(emitter, model, interval=(0.9999, 1.00001), tol=1e-11):
    """Smallest long-time population over band-edge detunings.

    Without loss the population falls monotonically toward the bound-state
    threshold and vanishes there, so ``d_f`` is that limit, 0, flagged with
    ``limit``. The strength one resolvable step ``tol`` inside the threshold
    is returned as ``resolved``. With loss a log-spaced scan around the
    threshold brackets a true minimum, which golden-section search refines.

    Args:
        emitter (EmitterSpec): Coupling.
        model (SpectralModel): Band-edge environment, its detuning is varied.
        interval (tuple): Range of edge frequencies over ω_eg.
        tol (float): Detuning resolution.

    Returns:
        (DetuningOptimum): ``d_f``, the optimal edge frequency and the threshold offset.
    """
    if model.is_vacuum:
        raise InputError("detuning optimisation needs a band-edge window")
    d_lo, d_hi = interval
    lo, hi = model.window
    if not lo < d_lo < d_hi < hi:
        raise InputError(f"detuning interval {interval} must lie inside the window {model.window}")

    threshold = bound_state_threshold(emitter, model, interval)
    delta = model.loss.delta
    e_lo, e_hi = 1.0 - d_hi, 1.0 - d_lo
    logger.debug("bound-state threshold at offset %.12e", threshold)

    if delta == 0.0:
        # the residue vanishes as the pole reaches the branch point at the edge
        offset = threshold - tol
        resolved = _strength(emitter, model, offset)
        if not np.isfinite(resolved):
            raise NumericalError("no bound state just inside the threshold", diagnostics={"offset": offset})
        return DetuningOptimum(d_f=0.0, detuning=1.0 - threshold, threshold=threshold,
                               limit=True, resolved=float(resolved))

    step_tol = min(tol, delta / 100.0)
    f = partial(_strength, emitter, model)
    for widening in range(MAX_WIDENINGS + 1):
        grid = _scan_offsets(threshold, delta, e_lo, e_hi)
        values = np.array([f(e) for e in grid])
        if not np.any(np.isfinite(values)):
            raise NumericalError("no pole found anywhere in the detuning scan",
                                 diagnostics={"offsets": grid.size})
        j = int(np.argmin(values))
        if 0 < j < grid.size - 1:
            break
        if widening == MAX_WIDENINGS:
            raise NumericalError("minimum stays on the boundary of the detuning interval",
                                 diagnostics={"interval": (1.0 - e_hi, 1.0 - e_lo)})
        width = e_hi - e_lo
        margin = 0.01 * (hi - lo)
        e_lo, e_hi = max(e_lo - width, 1.0 - hi + margin), min(e_hi + width, 1.0 - lo - margin)
        logger.warning("minimum on the interval boundary, widening to detunings [%.8f, %.8f]",
                       1.0 - e_hi, 1.0 - e_lo)

    offset, d_f = golden_section(f, grid[j - 1], grid[j + 1], tol=step_tol)
    if values[j] < d_f:
        offset, d_f = grid[j], values[j]
    return DetuningOptimum(d_f=float(d_f), detuning=1.0 - offset, threshold=threshold, resolved=float(d_f))

def _df_point(emitter, model, interval, tol, pair):
    beta_k, delta = pair
    edge_model = model.with_edge(k_be=beta_k / emitter.beta).with_loss(delta)
    opt = optimize_detuning(emitter, edge_model, interval=interval, tol=tol)
    logger.info("beta*K=%.3e delta=%.1e: D_f=%.6f (resolved %.6f) at detuning %.12f",
                beta_k, delta, opt.d_f, opt.resolved, opt.detuning)
    return DfPoint(beta_k=float(beta_k), delta=float(delta), d_f=opt.d_f, detuning=opt.detuning,
                   limit=opt.limit, resolved=opt.resolved)

def df_scan(emitter, model, beta_k_values, deltas, interval=(0.9999, 1.00001), tol=1e-11, threads=1):
    """``D_f`` on the grid of coupling products ``beta * K`` and loss widths, in scan order."""
    pairs = [(bk, d) for d in deltas for bk in beta_k_values]
    func = partial(_df_point, emitter, model, interval, tol)
    return ordered_map(func, pairs, threads=threads)
