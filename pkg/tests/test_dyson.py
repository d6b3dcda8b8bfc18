import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bandlaw.dyson import (
    FreeStieltjesSolution,
    free_measure_cdf,
    free_measure_grid,
    semicircle_reference,
    solve_free_stieltjes,
    solve_free_stieltjes_grid,
    system_residual,
    tabulate,
)
from bandlaw.exceptions import DysonConvergenceError

# Sample mean of the dilation Stieltjes transform at z=0.5, eta=0.5i over 50
# independent n=2000 Gaussian matrices (dense eigvalsh of the 4000 x 4000
# dilation, numpy default_rng(20240501)); standard error 5.4e-5.
MC_ORACLE = -2.5011104298755534e-17 + 0.7073134444452451j
MC_TOL = 0.02


def cubic_oracle(z, eta):
    """Upper half plane root of a((a+eta)^2 - |z|^2) + a + eta = 0."""
    r2 = abs(z) ** 2
    roots = np.roots([1, 2 * eta, eta**2 - r2 + 1, eta])
    up = [r for r in roots if r.imag > 0]
    assert len(up) == 1
    return up[0]


def semicircle_oracle(eta):
    # independent of the branch logic in the package: pick the root with Im > 0
    r = np.roots([1, eta, 1])
    return r[np.argmax(r.imag)]


def test_origin_is_golden_ratio():
    sol = solve_free_stieltjes(0, 1j)
    assert sol.m == pytest.approx((np.sqrt(5) - 1) / 2 * 1j, abs=1e-10)
    assert sol.b == 0


def test_closed_form_at_half():
    # a = i y with y((y + 1/2)^2 + 1/4) = y + 1/2 is solved by y = 1/sqrt(2)
    sol = solve_free_stieltjes(0.5, 0.5j)
    assert sol.m == pytest.approx(1j / np.sqrt(2), abs=1e-10)


def test_agrees_with_monte_carlo_oracle():
    assert abs(solve_free_stieltjes(0.5, 0.5j).m - MC_ORACLE) <= MC_TOL


@pytest.mark.parametrize(
    "z, eta",
    [(0.5, 0.5j), (1.2, 0.3j), (0.7, 10j), (0.5 + 0.5j, 1j), (2.0, 0.1j), (0.3, 0.4 + 0.2j), (-1j, 0.05j)],
)
def test_matches_cubic_roots(z, eta):
    sol = solve_free_stieltjes(z, eta)
    assert abs(sol.m - cubic_oracle(z, eta)) <= 1e-9
    assert sol.residual <= 1e-12
    assert sol.a == sol.c


def test_semicircle_reference_examples():
    assert semicircle_reference(1j) == pytest.approx(1j * (np.sqrt(5) - 1) / 2, abs=1e-12)
    assert semicircle_reference(2j) == pytest.approx(1j * (np.sqrt(2) - 1), abs=1e-12)
    assert abs(semicircle_reference(100j) - 0.01j) <= 1e-3


def test_large_eta_example():
    assert abs(solve_free_stieltjes(0.7, 10j).m - 0.1j) <= 2e-3


def test_large_eta_asymptotics():
    for z in (0, 0.7, 2.5):
        m = solve_free_stieltjes(z, 1e4j).m
        assert m == pytest.approx(-1 / 1e4j, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3), st.floats(-np.pi, np.pi), st.floats(-3, 3), st.floats(0.05, 3))
def test_solution_properties(r, theta, t, tau):
    z, eta = r * np.exp(1j * theta), complex(t, tau)
    sol = solve_free_stieltjes(z, eta)
    assert sol.m.imag > 0
    assert abs(sol.a - sol.c) <= 1e-10
    assert system_residual(sol.a, sol.b, sol.c, z, eta) <= 1e-12
    assert abs(sol.m - cubic_oracle(z, eta)) <= 1e-8
    # only |z| matters for m
    assert abs(solve_free_stieltjes(abs(z), eta).m - sol.m) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4), st.floats(0.01, 5))
def test_zero_shift_is_semicircle(t, tau):
    eta = complex(t, tau)
    m = solve_free_stieltjes(0, eta).m
    assert abs(m - semicircle_oracle(eta)) <= 1e-8
    assert abs(semicircle_reference(eta) - semicircle_oracle(eta)) <= 1e-12


@pytest.mark.parametrize("z", [0.0, 0.5, 0.9, 1.0, 1.3, 2.0])
def test_branch_continuity_along_imaginary_axis(z):
    taus = np.linspace(1, 0.05, 96)  # spacing 0.01
    ms = solve_free_stieltjes_grid(z, 1j * taus)
    assert np.all(ms.imag > 0)
    assert np.max(np.abs(ms.real)) <= 1e-10
    assert np.max(np.abs(np.diff(ms))) <= 0.1


def test_grid_matches_semicircle_fast():
    etas = 1j * np.linspace(0.05, 2, 100)
    start = time.perf_counter()
    ms = solve_free_stieltjes_grid(0, etas, tol=1e-12)
    elapsed = time.perf_counter() - start
    ref = np.array([semicircle_reference(e) for e in etas])
    assert np.max(np.abs(ms - ref)) <= 1e-8
    assert elapsed < 1.0


def test_grid_equals_pointwise():
    etas = np.array([0.1j, 0.5 + 0.3j, 2j])
    grid = solve_free_stieltjes_grid(1.1, etas)
    for eta, m in zip(etas, grid):
        assert abs(solve_free_stieltjes(1.1, eta).m - m) <= 1e-10


def test_invalid_eta_and_tol():
    with pytest.raises(ValueError):
        solve_free_stieltjes(0.5, 0)
    with pytest.raises(ValueError):
        solve_free_stieltjes(0.5, -1j)
    with pytest.raises(ValueError):
        solve_free_stieltjes(0.5, 1j, tol=0)
    with pytest.raises(ValueError):
        semicircle_reference(1.0)


def test_non_convergence_raises():
    with pytest.raises(DysonConvergenceError) as info:
        solve_free_stieltjes(1.0, 1e-3j, tol=1e-15, max_iter=3)
    assert info.value.iterations == 3
    assert info.value.residual > 1e-15


def test_tabulate_order():
    rows = tabulate([0, 1], [1j, 2j])
    assert [(r.z, r.eta) for r in rows] == [(0, 1j), (0, 2j), (1, 1j), (1, 2j)]
    assert all(isinstance(r, FreeStieltjesSolution) for r in rows)


@pytest.mark.parametrize("z", [0.0, 0.5, 1.0, 1.5, 2.5])
def test_free_measure_cdf_mass_and_symmetry(z):
    assert free_measure_cdf(z, -100) == 0.0
    assert abs(free_measure_cdf(z, 10) - 1) <= 1e-3
    assert abs(free_measure_cdf(z, 0) - 0.5) <= 1e-3
    for x in (0.3, 0.8, 1.7):
        assert abs(free_measure_cdf(z, x) + free_measure_cdf(z, -x) - 1) <= 1e-3
    t, cdf = free_measure_grid(complex(z))
    assert np.all(np.diff(cdf) >= 0)
    # F(x + y) - F(x) <= y + 4 tau for every grid x and y > 0
    tau = 1e-3
    for y in (0.001, 0.01, 0.1, 0.5, 2.0):
        shifted = np.interp(t + y, t, cdf, right=cdf[-1])
        assert np.all(shifted - cdf <= y + 4 * tau)


def test_monte_carlo_within_envelope():
    from bandlaw.ensembles import EnsembleSpec
    from bandlaw.lab import compare_to_free

    rows = compare_to_free(EnsembleSpec.block_band(1000, 250), [0.0, 0.5, 1.2], [0.5j, 1j], trials=3, constant=10.0)
    for r in rows:
        assert r.deviation <= r.envelope
        assert r.deviation <= 0.05


def test_free_measure_cdf_semicircle_at_origin():
    def semicircle_cdf(x):
        x = np.clip(x, -2, 2)
        return 0.5 + (x * np.sqrt(4 - x * x) / 4 + np.arcsin(x / 2)) / np.pi

    for x in (-1.9, -1.0, -0.2, 0.4, 1.3, 2.5):
        assert abs(free_measure_cdf(0, x) - semicircle_cdf(x)) <= 2e-3


def test_free_measure_grid_is_cached_and_readonly():
    a = free_measure_grid(0.5 + 0j)
    b = free_measure_grid(0.5 + 0j)
    assert a[0] is b[0]
    with pytest.raises(ValueError):
        a[1][0] = 1.0
    with pytest.raises(ValueError):
        free_measure_grid(0j, tau=0.0)
