import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qagap.anticross import (
    DetectionError,
    FinalBasis,
    HyperbolaFitError,
    detect,
    hamming_distance_fs_gs,
    hamming_weight_signal,
    hyperbola,
    hyperbola_fit,
    make_probe,
    overlaps,
)
from qagap.reproduce import chain5
from qagap.scaling import s_of_t
from qagap.spectra import EigenSolution, MinGap, SpectralSweep, default_grid, sweep

from _cases import chain5_analysis, system


@pytest.mark.parametrize("w4,J", [(1.49, 1.52), (1.51, 4.0), (1.49, 100.0)])
def test_trace_invariants(w4, J):
    tr = chain5_analysis(w4, J).traces
    for arr in (tr.a, tr.b):
        assert arr.min() >= -1e-15 and arr.max() <= 1 + 1e-12
        assert arr.sum(axis=0).max() <= 1 + 1e-9
    assert tr.a[0, -1] == pytest.approx(1.0, abs=1e-9)
    assert tr.a[1, -1] == pytest.approx(0.0, abs=1e-9)
    assert tr.b[1, -1] == pytest.approx(1.0, abs=1e-9)
    assert tr.b[0, -1] == pytest.approx(0.0, abs=1e-9)


def test_initial_overlaps_equal_degeneracy_over_dimension():
    # the uniform state puts weight m_k / 2**n on a level with m_k states
    a = chain5_analysis(1.49, 1.52)
    for k in range(a.traces.K):
        assert a.traces.a[k, 0] == pytest.approx(len(a.final.subspaces[k]) / 32, abs=1e-12)
    c7 = FinalBasis.from_ising(__import__("qagap.reproduce").reproduce.chain7(2.0))
    assert (c7.m0, c7.m1) == (1, 4)


def test_full_projection_is_normalized():
    sysh = system(1.49, 1.52)
    final = FinalBasis.from_ising(sysh.ising)
    sw = sweep(sysh, np.linspace(0, 1, 11), 3)
    tr = overlaps(sw, final, len(final.levels))
    np.testing.assert_allclose(tr.a.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(tr.b.sum(axis=0), 1.0, atol=1e-12)


def test_overlaps_are_basis_independent_under_degeneracy():
    # rotating inside a degenerate level does not change projector weights
    final = FinalBasis(2, (0.0, 1.0), ((0, 3), (1, 2)))
    v = np.array([0.6, 0.0, 0.0, 0.8])
    w = np.array([0.8, 0.0, 0.0, 0.6])
    np.testing.assert_allclose(final.weights(v, 2), final.weights(w, 2))


def test_overlaps_validation():
    a = chain5_analysis(1.49, 1.52)
    with pytest.raises(ValueError):
        overlaps(a.sweep, a.final, len(a.final.levels) + 1)
    bad = SpectralSweep(np.array([0.0, 1.0]), [EigenSolution(0.0, np.zeros(2), np.zeros((8, 2)))] * 2, 2)
    with pytest.raises(ValueError):
        overlaps(bad, a.final, 2)


def test_equal_weights_at_the_strong_crossing():
    r = chain5_analysis(1.49, 1.52).report
    assert r.s_cross == pytest.approx(0.7479, abs=2e-3)
    probe = make_probe(system(1.49, 1.52), FinalBasis.from_ising(chain5(1.49, 1.52)))
    a0, a1, _, _ = probe(r.s_cross)
    assert a0 == pytest.approx(a1, abs=1e-9)
    assert a0 + a1 >= 0.85


def _witness_certifies(r):
    g = r.gamma
    L, R = r.witness["left"], r.witness["right"]
    return (
        L["a0"] <= g and L["a1"] >= 1 - g and L["b0"] >= 1 - g and L["b1"] <= g
        and R["a0"] >= 1 - g and R["a1"] <= g and R["b0"] <= g and R["b1"] >= 1 - g
        and min(L["sum_a"], L["sum_b"], R["sum_a"], R["sum_b"]) >= 1 - g
        and L["s"] <= r.s_star <= R["s"]
    )


@pytest.mark.parametrize("w4,J", [(1.49, 1.52), (1.51, 4.0), (1.51, 10.0), (1.51, 100.0)])
def test_strong_verdicts_are_certified_by_witness(w4, J):
    r = chain5_analysis(w4, J).report
    assert r.verdict == "strong"
    assert _witness_certifies(r)
    assert r.epsilon_attained <= r.epsilon
    assert r.delta >= 2e-3 and r.delta <= r.delta_max


def test_weak_verdict_right_side_with_gamma_left_with_gamma_prime():
    r = chain5_analysis(1.49, 4.0, "XX").report
    assert r.verdict == "weak"
    L, R = r.witness["left"], r.witness["right"]
    g, gp = r.gamma, r.gamma_prime
    assert R["a0"] >= 1 - g and R["b1"] >= 1 - g and min(R["sum_a"], R["sum_b"]) >= 1 - g
    assert L["a1"] >= 1 - gp and L["b0"] >= 1 - gp
    assert not _witness_certifies(r)


@pytest.mark.parametrize("J", [1.52, 4.0, 10.0])
def test_complementary_instances_have_opposite_verdicts(J):
    v149 = chain5_analysis(1.49, J).report.verdict
    v151 = chain5_analysis(1.51, J).report.verdict
    assert (v149 == "none") != (v151 == "none")


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.15, 0.45), st.floats(0.0, 0.05),
    st.floats(0.001, 0.1), st.floats(0.0, 0.05),
)
def test_detector_monotone_in_gamma_and_epsilon(gamma, dg, eps, de):
    a = chain5_analysis(1.49, 1.52)
    base = detect(a.traces, a.min_gap, gamma, eps)
    looser = detect(a.traces, a.min_gap, min(gamma + dg, 0.5), eps + de)
    if base.verdict == "strong":
        assert looser.verdict == "strong"


def test_detect_rejects_min_gap_at_grid_edge():
    a = chain5_analysis(1.49, 1.52)
    edge = MinGap(0.9995, a.min_gap.min_gap)
    with pytest.raises(DetectionError):
        detect(a.traces, edge)
    with pytest.raises(ValueError):
        detect(a.traces, a.min_gap, gamma=0.6, gamma_prime=0.5)


def test_scale_invariance_of_traces_and_verdict():
    base = system(1.51, 10.0, alpha=0.1)
    scaled = system(1.51, 10.0, alpha=1.0)
    final = FinalBasis.from_ising(base.ising)
    p_base, p_scaled = make_probe(base, final), make_probe(scaled, final)
    for t in np.linspace(0.05, 0.95, 10):
        np.testing.assert_allclose(p_scaled(t), p_base(s_of_t(10.0, t)), atol=1e-9)
    v_base = chain5_analysis(1.51, 10.0, "X", 0.1).report.verdict
    v_scaled = chain5_analysis(1.51, 10.0, "X", 1.0).report.verdict
    assert v_base == v_scaled == "strong"


def _synthetic_sweep(delta, A, B, s0=0.5, e0=-1.0, h=1e-3, half=20):
    grid = s0 + h * np.arange(-half, half + 1)
    lo, hi = hyperbola(grid, e0, B, delta, A, s0)
    sols = [EigenSolution(s, np.array([l, u])) for s, l, u in zip(grid, lo, hi)]
    return SpectralSweep(grid, sols, 2)


def test_hyperbola_fit_recovers_exact_parameters():
    fit = hyperbola_fit(_synthetic_sweep(1e-3, 2.0, 0.1), 0.5, 0.02)
    assert fit.delta_min == pytest.approx(1e-3, rel=1e-6)
    assert fit.A == pytest.approx(2.0, rel=1e-6)
    assert fit.B == pytest.approx(0.1, rel=1e-6)
    assert fit.s_star == pytest.approx(0.5, abs=1e-9)


def test_hyperbola_fit_symmetric_crossing():
    fit = hyperbola_fit(_synthetic_sweep(2e-3, 1.5, 0.0), 0.5, 0.02)
    assert abs(fit.B) < 1e-8


def test_hyperbola_fit_flat_gap_is_ill_conditioned():
    grid = np.linspace(0.4, 0.6, 21)
    sols = [EigenSolution(s, np.array([-1.0, -0.9])) for s in grid]
    with pytest.raises(HyperbolaFitError):
        hyperbola_fit(SpectralSweep(grid, sols, 2), 0.5, 0.1, max_condition=1e6)
    with pytest.raises(ValueError):
        hyperbola_fit(SpectralSweep(grid, sols, 2), 0.5, 0.01)


def test_hyperbola_fit_on_strong_anticrossing():
    a = chain5_analysis(1.49, 1.52)
    fit = hyperbola_fit(a.sweep, a.min_gap.s_star, 0.01)
    assert fit.delta_min == pytest.approx(a.min_gap.min_gap, rel=0.10)


def test_hamming_signal():
    a = chain5_analysis(1.49, 1.52)
    d = hamming_distance_fs_gs(a.final)
    assert d == 5  # |01010> vs |10101>
    sig = dict(hamming_weight_signal(a.traces, a.final))
    assert sig[1.0] == pytest.approx(0.0, abs=1e-9)
    r = a.report
    L, R = r.witness["left"], r.witness["right"]
    assert sig[L["s"]] == pytest.approx(d * L["a1"])
    drop = sig[L["s"]] - sig[R["s"]]
    assert drop == pytest.approx(d * (L["a1"] - R["a1"]))
    assert drop >= 0.5 * d


def test_traces_csv(tmp_path):
    tr = chain5_analysis(1.49, 1.52).traces
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "s,a_0,a_1,a_2,a_3,a_4,b_0,b_1,b_2,b_3,b_4"
    assert len(lines) == len(tr.grid) + 1
    assert float(lines[-1].split(",")[1]) == tr.a[0, -1]
