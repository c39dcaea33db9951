import numpy as np
import pytest

from fracdecay import *


def test_empty_lattice():
    """Tests that a uniform medium reproduces the folded light cone, ω = |k + G| with two polarisations.
    The test will fail if the operator or the frequency units are wrong.
    """
    spec = LatticeSpec(r_over_a=0.0, eps_backbone_real=1.0, eps_sphere=1.0)
    basis = build_reciprocal_set(spec, 169)
    rng = np.random.default_rng(0)
    points = [np.array([0.5, 0.5, 0.5]), high_symmetry_k("W")] + list(rng.uniform(-1, 1, size=(100, 3)))
    for k in points:
        sol = solve_k(spec, k, basis, 12)
        expected = np.sort(np.repeat(np.linalg.norm(k[None, :] + basis.g_vectors, axis=1), 2))[:12]
        assert np.max(np.abs(sol.omegas - expected) / expected) < 1e-10


def test_operator_hermitian():
    """Tests that the assembled Bloch operator is Hermitian and positive semi-definite for the inverse opal."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 59)
    problem = assemble(spec, [0.3, 0.1, 0.7], basis)
    op = problem.operator
    assert problem.dimension == 118
    assert np.linalg.norm(op - op.conj().T) <= 1e-14 * np.linalg.norm(op)
    assert np.linalg.eigvalsh(op).min() > -1e-12

    sol = eigensolve(problem, 10)
    assert np.all(np.diff(sol.omegas) >= 0)
    assert sol.n_bands == 10


def test_gamma_zero_modes():
    """Tests that the two zero-frequency modes at Γ carry no field."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 27)
    sol = solve_k(spec, [0, 0, 0], basis, 4)
    assert np.allclose(sol.omegas[:2], 0, atol=1e-6)
    assert sol.omegas[2] > 0.1
    with pytest.raises(InputError):
        sol.coefficients(1)


def test_invalid_arguments():
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 9)
    problem = assemble(spec, [0.1, 0, 0], basis)
    for n in [0, 19, 2.5]:
        with pytest.raises(InputError):
            eigensolve(problem, n)
    sol = eigensolve(problem, 4)
    for band in [0, 5]:
        with pytest.raises(InputError):
            sol.coefficients(band)
    with pytest.raises(InputError):
        assemble(spec, [0.1, 0.2], basis)


def test_orthonormality():
    """Tests that the normalised fields satisfy <E_m|D_n> = δ_mn over a primitive cell."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 59)
    sol = solve_k(spec, [0.4, 0.15, 0.1], basis, 5)
    for m in range(1, 6):
        for n in range(1, 6):
            value = inner_product(sol, m, n)
            assert abs(value - (1.0 if m == n else 0.0)) < 1e-8, (m, n, value)


def test_field_reconstruction():
    """Tests the real-space field: Bloch periodicity and agreement of the scalar and vector call forms."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 59)
    k = np.array([0.2, 0.1, 0.0])
    sol = solve_k(spec, k, basis, 4)
    r = np.array([0.1, 0.2, 0.3])
    e = reconstruct_field(sol, 3, r)
    shifted = reconstruct_field(sol, 3, r + np.array([0.0, 0.5, 0.5]))
    # lattice translation by an FCC vector only adds the Bloch phase
    phase = np.exp(2j * np.pi * k @ np.array([0.0, 0.5, 0.5]))
    assert np.allclose(shifted, phase * e)

    many = reconstruct_field(sol, 3, np.stack([r, r]))
    assert many.shape == (2, 3)
    assert np.allclose(many[0], e)
    assert np.allclose(sol.mode_field(3)(r), e)


def test_f_factor():
    """Tests the backbone energy fraction: bounds, the uniform limit and agreement with Sobol sampling."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 59)
    sol = solve_k(spec, high_symmetry_k("X"), basis, 9)
    for band in [3, 5, 9]:
        f = f_factor(sol, band, spec)
        assert 0 < f <= 1
        f_mc = f_factor_monte_carlo(sol, band, spec, n_points=2**17, seed=1)
        assert f == pytest.approx(f_mc, abs=5e-3)

    uniform = LatticeSpec(r_over_a=0.3, eps_backbone_real=2.0, eps_sphere=2.0)
    usol = solve_k(uniform, [0.1, 0.2, 0.3], build_reciprocal_set(uniform, 27), 3)
    assert f_factor(usol, 1, uniform) == 1.0


def test_solve_many_threads():
    """Tests that thread-parallel solving returns bit-identical results in input order."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 27)
    points = build_kmesh(2).points
    serial = solve_many(spec, points, basis, 6, threads=1)
    parallel = solve_many(spec, points, basis, 6, threads=3)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.k, b.k)
        assert np.allclose(a.omegas, b.omegas, rtol=0, atol=1e-14)


@pytest.mark.slow
def test_complete_gap():
    """Tests that the Si inverse opal with 531 plane waves opens a complete gap between bands 8 and 9."""
    spec = LatticeSpec(r_over_a=0.3436)
    basis = build_reciprocal_set(spec, 531)
    path, _ = build_kpath(["Γ", "X", "W", "L", "Γ", "K", "W", "U", "X"], n_per_segment=8)
    points = np.concatenate([path, build_kmesh(4).points])
    sols = solve_many(spec, points, basis, 9)
    top8 = max(s.omegas[7] for s in sols)
    bottom9 = min(s.omegas[8] for s in sols)
    assert bottom9 > top8
    assert (bottom9 - top8) / (0.5 * (bottom9 + top8)) > 0.01
