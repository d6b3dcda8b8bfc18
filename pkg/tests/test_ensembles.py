import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from bandlaw.ensembles import (
    ATOM_FAMILIES,
    AtomSpec,
    EnsembleSpec,
    VarianceProfile,
    build_variance_profile,
    check_doubly_stochastic,
    random_doubly_stochastic_profile,
    sample_matrix,
    trial_generator,
    truncate_atom,
)
from bandlaw.exceptions import SpecError


def test_block_band_profile_values():
    prof = build_variance_profile(EnsembleSpec.block_band(9, 3))
    entries = prof.entries
    assert np.all((entries > 0).sum(axis=1) == 9)
    assert np.allclose(entries[entries > 0], 1 / 3, rtol=0, atol=1e-15)
    assert np.allclose((entries**2).sum(axis=1), 1.0, atol=1e-12)
    assert prof.b_n == pytest.approx(9.0)


def test_periodic_band_profile_values():
    prof = build_variance_profile(EnsembleSpec.periodic_band(10, 5))
    entries = prof.entries
    assert np.all((entries > 0).sum(axis=1) == 5)
    assert np.allclose(entries[entries > 0], 1 / np.sqrt(5))
    # 1-based (1, 10): |1 - 10| = 9 >= n - (d-1)/2 = 8, filled; (1, 5): 2 < 4 < 8, empty
    assert entries[0, 9] > 0
    assert entries[0, 4] == 0


def test_iid_profile_values():
    prof = build_variance_profile(EnsembleSpec.iid(4))
    assert np.all(prof.entries == 0.5)
    assert np.allclose((prof.entries**2).sum(axis=1), 1.0)


def _block_pattern_by_enumeration(n, b):
    # independent reading of the block layout: D on the diagonal, U above, T below,
    # T_m in the top-right corner and U_1 in the bottom-left corner
    m = n // b
    nonzero_blocks = set()
    for i in range(m):
        nonzero_blocks.add((i, i))
        if i + 1 < m:
            nonzero_blocks.add((i, i + 1))
            nonzero_blocks.add((i + 1, i))
    nonzero_blocks.add((0, m - 1))
    nonzero_blocks.add((m - 1, 0))
    mask = np.zeros((n, n), bool)
    for bi, bj in nonzero_blocks:
        mask[bi * b:(bi + 1) * b, bj * b:(bj + 1) * b] = True
    return mask


@pytest.mark.parametrize("n,b", [(9, 3), (20, 4), (30, 5)])
def test_block_band_support_matches_block_layout(n, b):
    spec = EnsembleSpec.block_band(n, b)
    X = sample_matrix(spec, seed=3, trial=1).values
    mask = _block_pattern_by_enumeration(n, b)
    assert np.all(X[~mask] == 0)
    assert np.all(X[mask] != 0)
    assert np.array_equal(build_variance_profile(spec).support, mask)


def test_periodic_band_support_by_definition():
    n, d = 11, 5
    X = sample_matrix(EnsembleSpec.periodic_band(n, d), seed=0, trial=0).values
    half = (d - 1) / 2
    for i in range(n):
        for j in range(n):
            gap = abs(i - j)
            if half < gap < n - half:
                assert X[i, j] == 0
            else:
                assert X[i, j] != 0


@pytest.mark.parametrize(
    "spec",
    [
        EnsembleSpec.block_band(12, 4),
        EnsembleSpec.periodic_band(10, 5, AtomSpec("complex-gaussian")),
        EnsembleSpec.product(3, 4, AtomSpec("rademacher")),
        EnsembleSpec.iid(5, AtomSpec("bernoulli-symmetric")),
    ],
)
def test_sampling_is_bit_reproducible(spec):
    a = sample_matrix(spec, seed=2**63 + 5, trial=7).values
    b = sample_matrix(spec, seed=2**63 + 5, trial=7).values
    assert a.tobytes() == b.tobytes()
    c = sample_matrix(spec, seed=2**63 + 5, trial=8).values
    d = sample_matrix(spec, seed=2**63 + 5, trial=7, stream=1).values
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_sample_dtype_follows_atom():
    assert sample_matrix(EnsembleSpec.iid(3), 0, 0).values.dtype == np.float64
    assert sample_matrix(EnsembleSpec.iid(3, AtomSpec("complex-gaussian")), 0, 0).values.dtype == np.complex128


def test_product_sample_is_linearization():
    spec = EnsembleSpec.product(4, 3)
    L = sample_matrix(spec, 1, 0).values
    assert L.shape == (12, 12)
    support = np.zeros((3, 3), bool)
    support[0, 1] = support[1, 2] = support[2, 0] = True
    blocks_nonzero = np.array([[np.any(L[4 * i:4 * i + 4, 4 * j:4 * j + 4]) for j in range(3)] for i in range(3)])
    assert np.array_equal(blocks_nonzero, support)


@pytest.mark.parametrize(
    "kwargs,fragment",
    [
        (dict(kind="block-band", n=10, b=3), "b | n"),
        (dict(kind="block-band", n=8, b=4), "at least 3 blocks"),
        (dict(kind="periodic-band", n=10, d=4), "(d-1)/2"),
        (dict(kind="periodic-band", n=5, d=7), "d <= n"),
        (dict(kind="product-linearization", n=3, m=0), "positive integer m"),
        (dict(kind="banana", n=3), "unknown ensemble kind"),
    ],
)
def test_shape_violations_are_named(kwargs, fragment):
    with pytest.raises(SpecError, match=fragment.replace("(", r"\(").replace(")", r"\)").replace("|", r"\|")):
        EnsembleSpec(**kwargs)


def test_general_profile_rejects_non_doubly_stochastic():
    prof = np.full((4, 4), 0.5)
    prof[1, 2] = 1.0
    with pytest.raises(SpecError, match="row 1"):
        EnsembleSpec.general(prof)
    with pytest.raises(SpecError, match="nonnegative"):
        EnsembleSpec.general(-np.full((4, 4), 0.5))


def test_check_doubly_stochastic_reports():
    prof = build_variance_profile(EnsembleSpec.block_band(12, 4))
    assert check_doubly_stochastic(prof, 1e-12).passed

    bad = prof.entries.copy()
    bad[5, 2] *= 2
    report = check_doubly_stochastic(bad, 1e-12)
    assert not report.passed
    assert report.worst_row == 5
    assert report.worst_col == 2
    assert report.max_row_deviation == pytest.approx(3 / 12)

    assert check_doubly_stochastic(np.array([[1.0]]), 1e-12).passed


shape_specs = st.one_of(
    st.builds(lambda m, b: EnsembleSpec.block_band(m * b, b), st.integers(3, 8), st.integers(1, 12)),
    st.builds(lambda n, h: EnsembleSpec.periodic_band(n, 2 * min(h, (n - 1) // 2) + 1), st.integers(1, 60), st.integers(0, 30)),
    st.builds(EnsembleSpec.product, st.integers(1, 10), st.integers(1, 6)),
    st.builds(EnsembleSpec.iid, st.integers(1, 50)),
)


@settings(max_examples=80, deadline=None)
@given(shape_specs)
def test_every_built_in_profile_is_doubly_stochastic(spec):
    prof = build_variance_profile(spec)
    assert check_doubly_stochastic(prof, 1e-12).passed
    X = sample_matrix(spec, 0, 0).values
    assert np.all(X[~prof.support] == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 80), st.data())
def test_random_profile_is_doubly_stochastic(n, data):
    k = data.draw(st.integers(1, n))
    spread = data.draw(st.floats(0, 0.9))
    prof = random_doubly_stochastic_profile(n, k, seed=data.draw(st.integers(0, 100)), spread=spread)
    assert check_doubly_stochastic(prof, 1e-12).passed
    assert VarianceProfile(prof).b_n >= k * (1 - spread) / (1 + spread) * (1 - 1e-12)
    EnsembleSpec.general(prof)


@pytest.mark.parametrize("family", ATOM_FAMILIES)
def test_atom_moments(family):
    N = 400_000
    xi = AtomSpec(family).sample(trial_generator(12345, 0), N)
    tol = 3 / np.sqrt(N)
    assert abs(np.mean(xi)) <= tol
    # second moment error scales with sd(|xi|^2), at most sqrt(2) for these families
    assert abs(np.mean(np.abs(xi) ** 2) - 1) <= tol * np.sqrt(2)


def test_complex_gaussian_splits_variance():
    N = 400_000
    xi = AtomSpec("complex-gaussian").sample(trial_generator(99, 0), N)
    tol = 3 / np.sqrt(N)
    assert abs(np.var(xi.real) - 0.5) <= tol
    assert abs(np.var(xi.imag) - 0.5) <= tol
    assert abs(np.corrcoef(xi.real, xi.imag)[0, 1]) <= tol
    assert abs(np.mean(np.abs(xi) ** 2) - 1) <= tol * np.sqrt(2)


@pytest.mark.parametrize("D", [0.3, 1.0, 1.5, 2.5, 7.0])
def test_truncated_mean_vanishes_by_integration(D):
    # E[xi 1{|xi| <= D}] for every family, by quadrature or exact enumeration
    gauss, _ = integrate.quad(lambda x: x * stats.norm.pdf(x), -D, D)
    s3 = np.sqrt(3)
    unif, _ = integrate.quad(lambda x: x / (2 * s3), -min(D, s3), min(D, s3))
    cg_re, _ = integrate.quad(lambda x: x * stats.norm.pdf(x, scale=np.sqrt(0.5)), -D, D)
    rad = sum(v * 0.5 for v in (-1.0, 1.0) if abs(v) <= D)
    p = 0.5
    bern = sum(v * p / 2 for v in (-1 / np.sqrt(p), 1 / np.sqrt(p)) if abs(v) <= D)
    for value in (gauss, unif, cg_re, rad, bern):
        assert abs(value) < 1e-12


def test_truncation_rademacher_unchanged():
    atom = AtomSpec("rademacher")
    trunc = truncate_atom(atom, 2.0)
    assert trunc.truncation == 2.0
    a = atom.sample(trial_generator(1, 0), 1000)
    b = trunc.sample(trial_generator(1, 0), 1000)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("family", ATOM_FAMILIES)
@pytest.mark.parametrize("threshold", [0.5, 1.2, 3.0])
def test_truncated_symmetric_atoms_stay_centered(family, threshold):
    N = 200_000
    xi = truncate_atom(AtomSpec(family), threshold).sample(trial_generator(7, 3), N)
    assert np.all(np.abs(xi) <= threshold)
    assert abs(np.mean(xi)) <= 3 / np.sqrt(N)


def test_gaussian_truncation_at_mesoscopic_threshold():
    threshold = np.sqrt(1024) * 256 ** (-0.05)
    assert threshold == pytest.approx(24.25, abs=0.01)
    atom = truncate_atom(AtomSpec("real-gaussian"), threshold)
    xi = atom.sample(trial_generator(5, 0), 100_000)
    assert np.max(np.abs(xi)) <= threshold


def test_truncation_keeps_smaller_threshold_and_rejects_nonpositive():
    atom = truncate_atom(truncate_atom(AtomSpec(), 3.0), 5.0)
    assert atom.truncation == 3.0
    with pytest.raises(SpecError):
        truncate_atom(AtomSpec(), 0.0)
    with pytest.raises(SpecError):
        truncate_atom(AtomSpec(), -1.0)


def test_entry_variance_matches_profile():
    spec = EnsembleSpec.block_band(6, 2)
    prof = build_variance_profile(spec).squared
    trials = 10_000
    draws = np.stack([sample_matrix(spec, 11, t).values for t in range(trials)])
    var = np.mean(draws**2, axis=0)
    se = prof * np.sqrt(2.0 / trials)  # Gaussian: Var(x^2) = 2 b^4
    on = prof > 0
    assert np.all(np.abs(var[on] - prof[on]) <= 5 * se[on])
    assert np.all(var[~on] == 0)


def test_spec_json_round_trip():
    prof = random_doubly_stochastic_profile(8, 3, seed=1)
    specs = [
        EnsembleSpec.block_band(12, 4, AtomSpec("rademacher", subgaussian_constant=1.2)),
        EnsembleSpec.periodic_band(9, 3, AtomSpec("uniform-symmetric", density_bound=0.3, truncation=1.5)),
        EnsembleSpec.general(prof),
        EnsembleSpec.product(3, 2, AtomSpec("bernoulli-symmetric", p=0.25)),
    ]
    for spec in specs:
        back = EnsembleSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert back.to_dict() == spec.to_dict()
        assert back.atom == spec.atom


def test_atom_validation():
    with pytest.raises(SpecError, match="unknown atom family"):
        AtomSpec("cauchy")
    with pytest.raises(SpecError):
        AtomSpec("bernoulli-symmetric", p=0)
    with pytest.raises(SpecError, match="unknown atom fields"):
        AtomSpec.from_dict({"family": "rademacher", "skew": 1})
