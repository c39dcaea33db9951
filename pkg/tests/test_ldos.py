import numpy as np
import pytest
from scipy import integrate

from fracdecay import *


def _small_crystal():
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 27)
    kmesh = build_kmesh(3, half_zone=True)
    return spec, basis, kmesh


def test_histogram_sum_rule():
    """Tests that the integrated LDOS does not depend on the bin width once every mode is binned."""
    spec, basis, kmesh = _small_crystal()
    r = ws_point("H").position
    samples = sample_modes(spec, basis, kmesh, r, orientations=["x", "z"], n_bands=6)
    for e_p in ["x", "z", None]:
        coarse = histogram_from_samples(samples, e_p, 0.01)
        fine = histogram_from_samples(samples, e_p, 0.003)
        assert coarse.integrated() == pytest.approx(fine.integrated(), rel=1e-10)
        assert coarse.integrated() > 0
    trace = histogram_from_samples(samples, None, 0.01).integrated()
    assert trace > histogram_from_samples(samples, "z", 0.01).integrated()

    with pytest.raises(InputError):
        histogram_from_samples(samples, "y", 0.01)
    with pytest.raises(InputError):
        histogram_from_samples(samples, "x", 0.0)


def test_histogram_from_solutions():
    """Tests that binning stored band solutions matches the streaming sampler."""
    spec, basis, kmesh = _small_crystal()
    r = (0.1, 0.2, 0.05)
    solutions = solve_many(spec, kmesh.points, basis, 6)
    direct = ldos_histogram(r, "y", solutions, kmesh, 0.01, omega_range=(0.0, 1.0))
    samples = sample_modes(spec, basis, kmesh, r, orientations=["y"], n_bands=6)
    streamed = histogram_from_samples(samples, "y", 0.01, omega_range=(0.0, 1.0))
    assert np.allclose(direct.values, streamed.values, rtol=1e-10, atol=1e-14)
    assert np.allclose(direct.centers, streamed.centers)

    with pytest.raises(InputError):
        ldos_histogram(r, "y", solutions[:-1], kmesh, 0.01)


def test_empty_lattice_ldos():
    """Tests that a uniform medium gives the vacuum LDOS 4ω^2/3 per polarisation direction.
    Below ω = 0.8 only the unfolded light cone contributes, so one wide bin averages 4ω^2/3 over it.
    """
    spec = LatticeSpec(r_over_a=0.0, eps_backbone_real=1.0, eps_sphere=1.0)
    basis = build_reciprocal_set(spec, 27)
    kmesh = build_kmesh(24, half_zone=True)
    samples = sample_modes(spec, basis, kmesh, (0.1, 0.3, 0.2), orientations=["z"], n_bands=4)
    hist = histogram_from_samples(samples, "z", 0.6, omega_range=(0.2, 0.8))
    expected = 4.0 / 3.0 * (0.8**3 - 0.2**3) / (3.0 * 0.6)
    assert hist.values[0] == pytest.approx(expected, rel=0.05)
    assert np.allclose(vacuum_ldos([0.5]), [1.0 / 3.0])


def test_sqrt_law_fit():
    """Tests the square-root fit on a histogram of exact bin integrals of K sqrt(ω - ω_BE)."""
    k_be, omega_be = 7.5, 0.8123
    edges = np.arange(0.7, 0.9 + 1e-12, 0.002)
    upper = np.clip(edges[1:] - omega_be, 0, None)**1.5
    lower = np.clip(edges[:-1] - omega_be, 0, None)**1.5
    values = k_be * 2.0 / 3.0 * (upper - lower) / np.diff(edges)
    hist = LdosHistogram(bin_edges=edges, values=values, position=(0.5, 0.0, 0.0))
    fit = sqrt_law_fit(hist, omega_be, 0.03)
    assert fit.exponent == pytest.approx(0.5, abs=1e-9)
    assert fit.k_be == pytest.approx(k_be, rel=1e-8)
    assert fit.n_bins >= 10

    with pytest.raises(InputError):
        sqrt_law_fit(hist, 1.5, 0.03)
    with pytest.raises(NumericalError):
        sqrt_law_fit(hist, omega_be, 0.002)


def _pocket(curvature, field):
    mode = lambda r: np.array(field, dtype=complex)
    return EdgePocket(k_point=(1.0, 0.0, 0.0), omega=0.8, curvature=np.diag(curvature), modes=(mode,))


def test_fit_band_edge():
    """Tests the effective-mass prefactor from fabricated pockets.
    Three isotropic pockets with an x-polarised edge field give zero weight along y.
    """
    pockets = tuple(_pocket([2.0, 2.0, 2.0], [1.0, 0.0, 0.0]) for _ in range(3))
    fit = BandEdgeFit(band=9, step=0.01, pockets=pockets, cell_volume=0.25)
    model = fit_band_edge(fit, (0.5, 0.0, 0.0), "x")

    k_phys = 0.25 * 4 * np.pi * np.sqrt(2) / (2 * np.pi)**1.5 * 3 / np.sqrt(8.0)
    assert model.omega_be == 0.8
    assert model.k_be == pytest.approx(k_phys * np.sqrt(2 * np.pi))
    assert model.k_be_scaled == pytest.approx(model.k_be * np.sqrt(0.8) / (4 * 0.8**2 / 3))
    assert fit_band_edge(fit, (0.5, 0.0, 0.0), "y").k_be == 0.0
    assert fit_band_edge(fit, (0.5, 0.0, 0.0)).k_be == pytest.approx(model.k_be)

    scaled = model.scaled()
    assert scaled.omega_be == 1.0
    assert scaled.k_be == model.k_be_scaled
    assert np.allclose(model.density([0.7, 0.8, 0.84]), [0.0, 0.0, model.k_be * 0.2])

    saddle = (_pocket([2.0, -1.0, 2.0], [1.0, 0.0, 0.0]),) + pockets[1:]
    with pytest.raises(NumericalError):
        fit_band_edge(BandEdgeFit(band=9, step=0.01, pockets=saddle, cell_volume=0.25), (0.5, 0, 0), "x")


def test_loss_delta():
    """Tests the mode broadening δ = ω0 (ε_I/ε_R) f / 2 and its argument checks."""
    spec = LatticeSpec(r_over_a=0.3436, eps_backbone_imag=0.01176)
    assert loss_delta(spec, 0.5, 0.8) == pytest.approx(0.8 * 1e-3 * 0.5 / 2)
    loss = LossModel.from_lattice(spec, 0.5, 0.8)
    assert loss.relative_width == pytest.approx(2.5e-4)
    assert LossModel.relative(1e-9, omega0=0.8).delta == pytest.approx(0.8e-9)
    for f in [0.0, 1.5]:
        with pytest.raises(InputError):
            loss_delta(spec, f, 0.8)
    with pytest.raises(InputError):
        LossModel(delta=-1.0)


def test_broadened_ldos():
    """Tests the closed-form Lorentzian-broadened edge against numerical convolution.
    Also checks the loss-free limit and that broadening raises the LDOS at the edge.
    """
    model = BandEdgeModel.dimensionless(0.999, 10.0)
    for delta in [1e-13, 1e-10, 1e-9]:
        loss = LossModel(delta=delta)
        omega = model.omega_be + delta * np.array([-100.0, -3.0, 0.0, 2.0, 100.0])
        closed = broadened_ldos(model, loss, omega)
        quad = broadened_ldos(model, loss, omega, method="quad")
        assert np.allclose(closed, quad, rtol=1e-8, atol=0)

    omega = np.array([0.99, 0.999, 1.0])
    assert np.array_equal(broadened_ldos(model, LossModel(), omega), model.density(omega))

    at_edge = [broadened_ldos(model, LossModel(delta=d), [model.omega_be])[0] for d in [0.0, 1e-12, 1e-10, 1e-8]]
    assert np.all(np.diff(at_edge) > 0)

    with pytest.raises(InputError):
        broadened_ldos(model, LossModel(delta=1e-10), omega, method="trapezoid")

    # slope against a central difference, taken in the edge offset
    origin = BandEdgeModel.dimensionless(0.0, 10.0)
    for delta in [0.0, 1e-10]:
        loss = LossModel(delta=delta)
        x, h = np.array([-2e-10, 5e-10, 3e-9]), 1e-14
        numeric = (broadened_ldos(origin, loss, x + h) - broadened_ldos(origin, loss, x - h)) / (2 * h)
        slope = broadened_ldos_slope(origin, loss, x)
        assert np.allclose(slope[1:], numeric[1:], rtol=1e-5)
        if delta > 0:
            assert slope[0] == pytest.approx(numeric[0], rel=1e-5)
        else:
            assert slope[0] == 0.0


def test_broadened_weight():
    """Tests that broadening only redistributes weight: the integral across the edge is unchanged."""
    model = BandEdgeModel.dimensionless(0.999, 10.0)
    loss = LossModel(delta=1e-10)
    b, width = model.omega_be, 1e-3
    opts = dict(points=[b], limit=400, epsabs=0.0, epsrel=1e-11)
    lossy = integrate.quad(lambda w: broadened_ldos(model, loss, np.array([w]))[0], b - width, b + width, **opts)[0]
    exact = 10.0 * 2.0 / 3.0 * width**1.5
    assert lossy == pytest.approx(exact, rel=1e-6)


def test_continued_ldos():
    """Tests that the continued LDOS matches the broadened one on and just below the real axis,
    and that its derivative agrees with a central difference off the axis.
    """
    model = BandEdgeModel.dimensionless(0.999, 10.0)
    for delta in [0.0, 1e-10]:
        loss = LossModel(delta=delta)
        omega = model.omega_be + np.array([-1e-6, -1e-9, 3e-10, 1e-8, 1e-5])
        real = broadened_ldos(model, loss, omega)
        assert np.allclose(continued_ldos(model, loss, omega), real, rtol=0, atol=1e-12)
        below = continued_ldos(model, loss, omega - 1e-15j)
        assert np.allclose(below, real, rtol=0, atol=1e-8)

    # edge at the origin keeps the difference quotient free of rounding in omega
    origin = BandEdgeModel.dimensionless(0.0, 10.0)
    loss = LossModel(delta=1e-10)
    omega = 3e-10 - 2e-10j
    h = 1e-13
    numeric = (continued_ldos(origin, loss, omega + h) - continued_ldos(origin, loss, omega - h)) / (2 * h)
    assert continued_ldos(origin, loss, omega, derivative=True) == pytest.approx(numeric, rel=1e-5)


@pytest.mark.slow
def test_band_edge_prefactor_at_h():
    """Tests the band-edge model of the closed packed Si inverse opal at the H point:
    edge near 0.8 and K_BE = 10 within 15 %, the same for every orientation on the cubic site.
    """
    spec = LatticeSpec(r_over_a=0.3536)
    basis = build_reciprocal_set(spec, 531)
    fit = solve_x_stencils(spec, basis, band=9, step=0.01, threads=3)
    assert 0.7 < fit.omega_be < 0.9
    h_point = ws_point("H").position
    values = [fit_band_edge(fit, h_point, o).k_be_scaled for o in ["x", "y", "z"]]
    assert all(8.5 <= v <= 11.5 for v in values), values
    assert np.allclose(values, values[0], rtol=1e-3)


def test_band_edge_model_wrapper():
    """Tests that the one-call band-edge model matches stencils solved once and reused."""
    spec, basis, _ = _small_crystal()
    r = ws_point("H").position
    fit = solve_x_stencils(spec, basis, band=9, step=0.01)
    try:
        expected = fit_band_edge(fit, r, "x")
    except NumericalError:
        with pytest.raises(NumericalError):
            band_edge_model(spec, basis, r, "x", band=9, step=0.01)
        return
    model = band_edge_model(spec, basis, r, "x", band=9, step=0.01)
    assert model.omega_be == expected.omega_be
    assert model.k_be == pytest.approx(expected.k_be, rel=1e-12)


def test_orientation_average():
    """Tests that the LDOS averaged over x, y and z equals a third of the unprojected trace, bin by bin."""
    spec, basis, kmesh = _small_crystal()
    for r in [ws_point("H").position, (0.1, 0.2, 0.05)]:
        samples = sample_modes(spec, basis, kmesh, r, orientations=["x", "y", "z"], n_bands=6)
        average = np.mean([histogram_from_samples(samples, o, 0.01).values for o in ["x", "y", "z"]], axis=0)
        trace = histogram_from_samples(samples, None, 0.01).values
        assert np.allclose(average, trace / 3.0, rtol=1e-10, atol=1e-12 * trace.max())


def test_modes_thread_independent():
    """Tests that band frequencies and LDOS histograms are bit-identical for 1, 4 and 8 worker threads."""
    spec, basis, kmesh = _small_crystal()
    r = ws_point("H").position
    bands = [np.array([s.omegas for s in solve_many(spec, kmesh.points, basis, 6, threads=t)]) for t in [1, 4, 8]]
    hists = [histogram_from_samples(sample_modes(spec, basis, kmesh, r, ["z"], 6, threads=t), "z", 0.01).values
             for t in [1, 4, 8]]
    for other in bands[1:]:
        assert np.array_equal(bands[0], other)
    for other in hists[1:]:
        assert np.array_equal(hists[0], other)


@pytest.mark.slow
def test_sqrt_law_at_h():
    """Tests the closed packed inverse opal at the H point on a mesh of 55296 half-zone wavevectors:
    the histogram just above the edge grows with exponent 0.5 and its prefactor agrees with the
    effective-mass model of the same basis within the mesh-limited 35 %.
    """
    spec = LatticeSpec(r_over_a=0.3536)
    basis = build_reciprocal_set(spec, 169)
    kmesh = build_kmesh(48, half_zone=True)
    assert len(kmesh.points) >= 50000
    r = ws_point("H").position
    samples = sample_modes(spec, basis, kmesh, r, orientations=["z"], n_bands=10, threads=8)
    hist = histogram_from_samples(samples, "z", 0.002, omega_range=(0.70, 0.90))

    fit = solve_x_stencils(spec, basis, band=9, step=0.01, threads=3)
    edge = fit_band_edge(fit, r, "z")
    law = sqrt_law_fit(hist, edge.omega_be, 0.02)
    assert law.exponent == pytest.approx(0.5, abs=0.05)
    assert law.k_be == pytest.approx(edge.k_be, rel=0.35)
