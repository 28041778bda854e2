"""The numba kernels against their numpy twins and against direct formulas."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qslp import kernels
from qslp.solver import SolverConfig, _dimensionless_params

BACKENDS = ("numba", "numpy")


def random_state(rng, nz):
    return rng.standard_normal((5, nz)) + 1j * rng.standard_normal((5, nz))


def test_resolve_backend():
    assert kernels.resolve_backend("numpy") == "numpy"
    assert kernels.resolve_backend("numba") == "numba"
    with pytest.raises(ValueError):
        kernels.resolve_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
def test_forward_sweep_is_trapezoid(backend):
    rng = np.random.default_rng(1)
    y = random_state(rng, 60)
    kappa, dz, ph = 50.0, 1 / 59, np.exp(-0.3j)
    ep, _ = kernels.solve_fields(y, 0.7 + 0.1j, kappa, dz, ph, backend)
    rho = y[0]
    ref = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]))]) * 1j * kappa * dz + 0.7 + 0.1j
    np.testing.assert_allclose(ep, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_backward_sweep_matches_closed_form_for_uniform_source(backend):
    # -E' + i dk E = i kappa rho with E(1) = 0 and rho uniform:
    # E(z) = (kappa rho / dk) (1 - exp(i dk (z - 1)))
    nz, kappa, dkl, rho = 801, 50.0, 3.0, 0.2 - 0.1j
    dz = 1 / (nz - 1)
    y = np.zeros((5, nz), complex)
    y[1] = rho
    _, em = kernels.solve_fields(y, 0.0, kappa, dz, np.exp(-1j * dkl * dz), backend)
    z = np.linspace(0, 1, nz)
    exact = kappa * rho / dkl * (1 - np.exp(1j * dkl * (z - 1)))
    np.testing.assert_allclose(em, exact, rtol=0, atol=1e-5 * np.abs(exact).max())


@given(st.integers(0, 2**32 - 1), st.integers(50, 120), st.integers(1, 30))
def test_integrate_backends_agree(seed, nz, n_steps):
    rng = np.random.default_rng(seed)
    y0 = random_state(rng, nz) * 1e-3
    m = 2 * n_steps + 1
    e_in = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    qf, qb = rng.random(m), rng.random(m)
    params = _dimensionless_params(SolverConfig(nz=nz))
    out = {}
    for b in BACKENDS:
        y = y0.copy()
        rec = np.zeros((n_steps + 1, 5), complex)
        fail = np.zeros(3, np.int64)
        done = kernels.integrate(y, e_in, qf, qb, params, n_steps, 1, rec, fail, b)
        assert done == n_steps
        out[b] = (y, rec)
    scale = np.abs(out["numpy"][0]).max()
    np.testing.assert_allclose(out["numba"][0], out["numpy"][0], rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(out["numba"][1], out["numpy"][1], rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_integrate_reports_first_non_finite(backend):
    nz, n = 60, 5
    y = np.zeros((5, nz), complex)
    y[2, 17] = np.nan
    rec = np.zeros((n + 1, 5), complex)
    fail = np.zeros(3, np.int64)
    params = _dimensionless_params(SolverConfig(nz=nz))
    ones = np.ones(2 * n + 1)
    done = kernels.integrate(y, 0 * ones + 0j, ones, ones, params, n, 1, rec, fail, backend)
    assert done == 0
    assert fail[0] == 0 and kernels.VARIABLES[fail[1]] in kernels.VARIABLES


def brute_histogram(h, s, width, nbins):
    out = np.zeros(nbins, np.int64)
    for a in h:
        for b in s:
            d = b - a
            if 0 <= d < width * nbins:
                k = int(d / width)
                if k < nbins:
                    out[k] += 1
    return out


times = st.lists(st.floats(0, 50.0, allow_nan=False), max_size=40)


@given(times, times, st.integers(1, 40))
def test_pair_histogram_matches_brute_force(h, s, nbins):
    h, s = np.sort(h), np.sort(s)
    ref = brute_histogram(h, s, 0.5, nbins)
    for b in BACKENDS:
        got = kernels.pair_histogram(h, s, 0.5, nbins, backend=b)
        np.testing.assert_array_equal(got[0], ref)


@given(times, times, st.integers(1, 5))
def test_pair_histogram_blocks_partition_counts(h, s, nblocks):
    h, s = np.sort(h), np.sort(s)
    blocks = (np.arange(len(h)) * nblocks) // max(len(h), 1)
    per = {b: kernels.pair_histogram(h, s, 0.5, 30, blocks, nblocks, backend=b) for b in BACKENDS}
    np.testing.assert_array_equal(per["numba"], per["numpy"])
    np.testing.assert_array_equal(per["numba"].sum(axis=0), kernels.pair_histogram(h, s, 0.5, 30)[0])
