import numpy as np
import pytest

from qagap.hamiltonian import DriverSpec, SystemHamiltonian
from qagap.instances import IsingModel, gen_loop_gadget
from qagap.krylov import EigensolverError, block_lanczos
from qagap.spectra import (
    EigenSolution,
    default_grid,
    fit_gap_exponent,
    golden_section,
    level_gap,
    locate_min_gap,
    lowest_eigenpairs,
    sweep,
)

from _cases import system


def random_model(n, seed):
    rng = np.random.default_rng(seed)
    J = {(i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n)}
    return IsingModel(n, tuple(rng.normal(size=n)), J)


@pytest.mark.parametrize("s", [0.0, 0.25, 0.5, 0.75, 0.95, 1.0])
@pytest.mark.parametrize("driver", ["X", "XX"])
def test_dense_and_iterative_agree_at_n8(s, driver):
    m = random_model(8, 7)
    drv = DriverSpec.x() if driver == "X" else DriverSpec.xx(m.edges, -1.0)
    sysh = SystemHamiltonian(m, drv)
    dense = lowest_eigenpairs(sysh, s, 4, method="dense")
    it = lowest_eigenpairs(sysh, s, 4, method="lanczos")
    np.testing.assert_allclose(it.values, dense.values, atol=1e-9)
    # compare spectral projectors of complete level clusters (s=0 is degenerate)
    full = sysh.dense(s)
    e_all = np.linalg.eigvalsh(full)
    edges = [0] + [i for i in range(1, 4) if e_all[i] - e_all[i - 1] > 1e-6] + [4]
    for lo, hi in zip(edges, edges[1:]):
        if hi < len(e_all) and e_all[hi] - e_all[hi - 1] <= 1e-6:
            continue
        P = it.vectors[:, lo:hi] @ it.vectors[:, lo:hi].T
        Pd = dense.vectors[:, lo:hi] @ dense.vectors[:, lo:hi].T
        np.testing.assert_allclose(P, Pd, atol=1e-8)


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_eigenpair_residuals(method):
    sysh = SystemHamiltonian(gen_loop_gadget(10, 4.0, normalize=True))
    for s in (0.3, 0.68, 0.9):
        sol = lowest_eigenpairs(sysh, s, 3, method=method)
        R = sysh.apply(s, sol.vectors) - sol.vectors * sol.values
        res = np.linalg.norm(R, axis=0)
        assert res.max() <= 1e-9 * max(sysh.norm_bound(s), 1.0)
        np.testing.assert_allclose(sol.vectors.T @ sol.vectors, np.eye(3), atol=1e-10)


def test_iterative_path_above_dense_threshold():
    sysh = SystemHamiltonian(gen_loop_gadget(12, 4.0, normalize=True))
    sol = lowest_eigenpairs(sysh, 0.5, 2)
    assert sol.residuals is not None
    assert sol.residuals.max() <= 1e-9 * sysh.norm_bound(0.5)


def test_lanczos_reports_nonconvergence():
    m = random_model(8, 1)
    sysh = SystemHamiltonian(m)
    with pytest.raises(EigensolverError) as err:
        block_lanczos(lambda X: sysh.apply(0.5, X), 256, 2, tol=1e-30, max_restarts=1)
    assert err.value.residuals is not None


def test_lanczos_widens_block_after_nonconvergence(monkeypatch):
    import qagap.spectra as spectra

    sysh = SystemHamiltonian(random_model(8, 2))
    seen = []

    def flaky(matvec, dim, k, *, block, **kw):
        seen.append(block)
        if block == k + 2:
            raise EigensolverError("stalled", np.ones(k))
        return block_lanczos(matvec, dim, k, block=block, **kw)

    monkeypatch.setattr(spectra, "block_lanczos", flaky)
    sol = lowest_eigenpairs(sysh, 0.3, 2, method="lanczos")
    assert seen == [4, 12]
    ref = lowest_eigenpairs(sysh, 0.3, 2, method="dense")
    np.testing.assert_allclose(sol.values, ref.values, atol=1e-9)


def test_lanczos_failure_after_widening_carries_s(monkeypatch):
    import qagap.spectra as spectra

    def stuck(matvec, dim, k, **kw):
        raise EigensolverError("stalled", np.ones(k))

    monkeypatch.setattr(spectra, "block_lanczos", stuck)
    with pytest.raises(EigensolverError) as err:
        lowest_eigenpairs(SystemHamiltonian(random_model(8, 2)), 0.3, 2, method="lanczos")
    assert err.value.s == 0.3


def test_lowest_eigenpairs_validation():
    sysh = SystemHamiltonian(random_model(3, 0))
    with pytest.raises(ValueError):
        lowest_eigenpairs(sysh, 0.5, 8)
    with pytest.raises(ValueError):
        lowest_eigenpairs(sysh, 0.5, 2, method="magic")


def test_level_gap_skips_degenerate_ground_level():
    assert level_gap(np.array([-1.0, -1.0 + 1e-13, 0.5, 2.0])) == pytest.approx(1.5)
    sol = EigenSolution(0.5, np.array([-1.0, -1.0, 0.5]))
    assert sol.level_one_index() == 2
    with pytest.raises(ValueError):
        level_gap(np.array([1.0, 1.0]))


def test_golden_section_on_parabola():
    x, fx = golden_section(lambda x: (x - 0.3141) ** 2 + 2.0, 0.0, 1.0, 1e-10)
    # f is flat to rounding within ~sqrt(eps) of the minimizer
    assert x == pytest.approx(0.3141, abs=1e-7)
    assert fx == pytest.approx(2.0)


def test_fit_gap_exponent_recovers_synthetic_slope():
    pts = [(n, 3.0 * np.exp(-0.6 * n)) for n in range(4, 16, 2)]
    c, r2 = fit_gap_exponent(pts)
    assert c == pytest.approx(-0.6, abs=1e-12)
    assert r2 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_gap_exponent(pts[:3])


def test_default_grid():
    g = default_grid(1e-3)
    assert len(g) == 1001 and g[0] == 0.0 and g[-1] == 1.0
    with pytest.raises(ValueError):
        default_grid(0.3)


def test_sweep_grid_validation():
    sysh = SystemHamiltonian(random_model(3, 0))
    with pytest.raises(ValueError):
        sweep(sysh, [0.5, 0.2], 2)
    with pytest.raises(ValueError):
        sweep(sysh, [0.5, 1.5], 2)


def test_sweep_parallel_matches_sequential_and_csv_is_exact(tmp_path):
    sysh = system(1.49, 1.52)
    grid = np.linspace(0, 1, 21)
    a = sweep(sysh, grid, 3)
    b = sweep(sysh, grid, 3, workers=2)
    np.testing.assert_array_equal(a.values, b.values)
    a.to_csv(tmp_path / "a.csv")
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "s,E_0,E_1,E_2,gap"
    back = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    np.testing.assert_array_equal(back[:, 1:4], a.values)


def test_sweep_phases_are_continuous():
    sw = sweep(system(1.51, 4.0), np.linspace(0, 0.5, 51), 2)
    prev = None
    for sol in sw.solutions:
        if prev is not None:
            assert prev @ sol.vectors[:, 0] > 0
        prev = sol.vectors[:, 0]
    assert np.all(sw.solutions[0].vectors[:, 0] > 0)


def test_locate_min_gap_strong_case():
    mg = locate_min_gap(system(1.49, 1.52))
    assert mg.s_star == pytest.approx(0.7479, abs=2e-4)
    assert mg.min_gap == pytest.approx(0.0018228, rel=1e-3)
    assert mg.candidates[0] == (mg.s_star, mg.min_gap)
    assert mg.to_json()["s_star"] == mg.s_star


def test_locate_min_gap_is_not_above_any_grid_gap():
    sysh = system(1.51, 10.0)
    mg = locate_min_gap(sysh)
    assert mg.min_gap <= mg.coarse_gaps.min() + 1e-15
