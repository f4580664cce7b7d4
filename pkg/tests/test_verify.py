import numpy as np
import pytest

from plaplab import (
    Problem,
    RegimeError,
    SolveOptions,
    TwoBump1D,
    build_grid,
    build_weight,
    weight_from_values,
)
from plaplab.verify import (
    FAIL,
    INCONCLUSIVE,
    OUT_OF_REGIME,
    PASS,
    SweepResult,
    blowup_asymptote,
    monotonicity_sweep,
    positivity_delta_sweep,
    positivity_q_sweep,
    q_limit_lambda_star,
    threshold_from_flags,
    uniqueness_multistart,
    verdict_decreasing,
    verdict_nondecreasing,
)


@pytest.fixture(scope="module")
def small_connected():
    g = build_grid(1, 10.0, 101, "dirichlet")
    x = g.axis_coords(0)
    w = weight_from_values(g, np.where((x >= 3.5) & (x <= 6.5), 2.0, -4.0))
    return Problem.build(2.0, 1.5, -1.0, w)


def test_verdict_helpers_pure():
    assert verdict_decreasing([3.0, 2.0, 1.0]) == PASS
    assert verdict_decreasing([3.0, 3.5]) == FAIL
    assert verdict_nondecreasing([1.0, 1.0, 2.0]) == PASS
    assert threshold_from_flags([1, 2, 3], [False, True, True]) == 2
    assert threshold_from_flags([1, 2, 3], [True, False, True]) == 3
    assert threshold_from_flags([1, 2], [False, False]) is None


def test_uniqueness_pass_and_gate(small_connected):
    res = uniqueness_multistart(small_connected, SolveOptions(), n_starts=6)
    assert res.verdicts["agreement"] == PASS
    assert res.verdicts["hidden_convexity"] == PASS
    assert res.notes["max_pairwise_sup_distance"] <= 1e-4
    gated = uniqueness_multistart(
        Problem.build(2.0, 1.5, 0.05, small_connected.weight), SolveOptions())
    assert gated.verdicts["agreement"] == OUT_OF_REGIME


def test_monotonicity_small(small_connected):
    res = monotonicity_sweep(small_connected, [-8.0, -2.0, -0.5],
                             SolveOptions(n_starts=1))
    assert res.verdicts["monotone"] == PASS
    assert res.verdicts["decay"] in (PASS, FAIL)  # ratio 0.1 needs wide span
    res_wide = monotonicity_sweep(small_connected, [-64.0, -0.5],
                                  SolveOptions(n_starts=1))
    assert res_wide.verdicts["decay"] == PASS
    bad = monotonicity_sweep(small_connected, [-1.0, -2.0], SolveOptions())
    assert bad.verdicts["monotone"] == OUT_OF_REGIME


def test_single_lambda_vacuous(small_connected):
    res = monotonicity_sweep(small_connected, [-1.0], SolveOptions(n_starts=1))
    assert res.verdicts["monotone"] == PASS
    assert "decay" not in res.verdicts


def test_blowup_wrong_side_rejected():
    g = build_grid(1, 2.0, 101, "neumann")
    w = build_weight(g, TwoBump1D(2.0, 1.0, 1.2))
    prob = Problem.build(2.0, 1.5, -0.4, w)
    with pytest.raises(RegimeError):
        blowup_asymptote(prob, [0.1, 0.2], SolveOptions())  # above lambda_1


def test_blowup_small_run():
    g = build_grid(1, 2.0, 101, "neumann")
    w = build_weight(g, TwoBump1D(2.0, 1.0, 1.2))
    prob = Problem.build(2.0, 1.5, -0.4, w)
    res = blowup_asymptote(prob, [-0.4, -0.1], SolveOptions(n_starts=1))
    assert res.verdicts["asymptote"] == PASS
    assert res.verdicts["m_to_zero"] == PASS
    assert res.verdicts["interior_growth"] == PASS


def test_q_limit_identity_case():
    # when the eigenfunction mass is nonnegative at exponent p, every
    # threshold collapses to the principal eigenvalue
    g = build_grid(1, 2.0, 101, "neumann")
    w = build_weight(g, TwoBump1D(2.0, 1.0, 1.2))
    prob = Problem.build(2.0, 1.5, -0.4, w)
    res = q_limit_lambda_star(prob, [1.5, 1.9, 2.0], SolveOptions())
    assert res.verdicts["limit"] == PASS
    assert all(abs(v) <= 1e-6 for v in res.columns["lambda_star"])
    assert res.columns["gap_to_p"][-1] == pytest.approx(0.0, abs=1e-12)


def test_q_limit_gate():
    g = build_grid(1, 2.0, 101, "neumann")
    w = build_weight(g, TwoBump1D(2.0, 1.0, 1.2))
    prob = Problem.build(2.0, 1.5, -0.4, w)
    res = q_limit_lambda_star(prob, [1.9, 1.5], SolveOptions())
    assert res.verdicts["limit"] == OUT_OF_REGIME


def test_positivity_delta_gate(small_connected):
    res = positivity_delta_sweep(
        Problem.build(2.0, 1.5, 5.0, small_connected.weight),
        [1.0, 0.5], SolveOptions(), lam1=0.0987)
    assert res.verdicts["threshold_found"] == OUT_OF_REGIME
    with pytest.raises(RegimeError):
        positivity_delta_sweep(small_connected, [0.5, 1.0], SolveOptions(),
                               lam1=0.0987)


def test_positivity_delta_small(small_connected):
    res = positivity_delta_sweep(small_connected, [1.0, 0.05],
                                 SolveOptions(n_starts=1), lam1=0.0987)
    assert res.verdicts["threshold_found"] == PASS
    assert res.notes["delta0_estimate"] == 0.05
    assert res.columns["positive_everywhere"] == [False, True]


def test_positivity_q_small(small_connected):
    res = positivity_q_sweep(small_connected, [1.3, 1.95],
                             SolveOptions(n_starts=1))
    assert res.verdicts["threshold_found"] == PASS
    assert res.notes["q0_estimate"] == 1.95
    assert res.columns["positive_everywhere"] == [False, True]


def test_sweep_result_roundtrip(tmp_path, small_connected):
    res = monotonicity_sweep(small_connected, [-2.0, -0.5],
                             SolveOptions(n_starts=1))
    path = tmp_path / "sweep.csv"
    res.to_csv(path)
    rows = path.read_text().strip().splitlines()
    header = rows[0].split(",")
    assert header[0] == "lam"
    # verdict is recomputable from the emitted columns alone
    data = {k: [] for k in header[1:]}
    for line in rows[1:]:
        cells = line.split(",")
        for k, c in zip(header[1:], cells[1:]):
            data[k].append(float(c) if c else np.nan)
    viol = [v for v in data["pair_violation"] if not np.isnan(v)]
    recomputed = PASS if all(v <= res.tolerances["mono_tol"] for v in viol) else FAIL
    assert recomputed == res.verdicts["monotone"]
    obj = res.to_json_obj()
    assert obj["verdicts"] == res.verdicts
