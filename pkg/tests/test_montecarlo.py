import numpy as np
import pytest

from iqmimo.montecarlo import (ScenarioConfig, build_scenario, loss_ratio, receiver_setup, run_point,
                               run_sweep)


def small(**kw):
    base = dict(n_antennas=8, n_uts=2, trials=6, seed=3, sweep_values=(8,))
    base.update(kw)
    return ScenarioConfig(**base)


def test_point_is_deterministic():
    c = small()
    a, b = run_point(c, "iqa_wlmmse"), run_point(c, "iqa_wlmmse")
    assert a == b
    assert a.mc_sum_rate > 0 and np.isfinite(a.asy_sum_rate)


def test_threads_do_not_change_results():
    c = small()
    assert run_point(c, "iqu_mmse") == run_point(c, "iqu_mmse", threads=3)


def test_receivers_coincide_without_iqi():
    c = small(iqi_mode="none")
    rows = {r.receiver: r for r in run_sweep(c)}
    assert np.isclose(rows["iqu_mmse"].mc_sum_rate, rows["mmse_no_iqi"].mc_sum_rate, rtol=1e-12)
    assert np.isclose(rows["iqa_wlmmse"].mc_sum_rate, rows["iqu_mmse"].mc_sum_rate, rtol=1e-9)
    assert np.isclose(rows["iqa_wlmmse"].asy_sum_rate, rows["iqu_mmse"].asy_sum_rate, rtol=1e-8)


def test_perfect_csi_is_an_upper_reference():
    rows = {r.receiver: r for r in run_sweep(small(n_antennas=16, sweep_values=(16,), trials=10))}
    assert rows["mmse_perfect_csi"].mc_sum_rate > rows["mmse_no_iqi"].mc_sum_rate


def test_single_trial_is_flagged():
    r = run_point(small(trials=1), "iqu_mmse")
    assert r.single_trial and r.mc_stderr == 0


def test_sweep_shapes():
    rows = run_sweep(small(receivers=("iqu_mmse",)), "n", [8])
    assert len(rows) == 1 and rows[0].sweep_value == 8
    rows = run_sweep(small(receivers=("iqu_mmse", "mmse_no_iqi"), sweep_var="eps",
                           sweep_values=(0.0, 0.1)), asymptotics=False)
    assert [r.sweep_value for r in rows] == [0.0, 0.0, 0.1, 0.1]
    assert all(np.isnan(r.asy_sum_rate) for r in rows)
    with pytest.raises(ValueError):
        run_sweep(small(), "n", [])


def test_multi_mode_sweep_runs_baselines_once():
    c = small(iqi_mode=("bs_only", "ut_only"), receivers=("iqu_mmse", "mmse_no_iqi"), name="x")
    rows = run_sweep(c, asymptotics=False)
    assert sorted((r.scenario, r.receiver) for r in rows) == [
        ("x", "mmse_no_iqi"), ("x/bs_only", "iqu_mmse"), ("x/ut_only", "iqu_mmse")]


def test_iqi_draws_shared_across_sweep_points():
    c = small(sweep_var="eps", sweep_values=(0.0, 0.1), eps=(0.1, 0.2))
    a, b = build_scenario(c.at(0.0), point=0), build_scenario(c.at(0.0), point=1)
    thetas = lambda sc: [u.theta for cell in sc.ut_iqi for u in cell]
    assert thetas(a) == thetas(b)
    r = build_scenario(small(redraw_iqi=True), point=1)
    assert thetas(r) != thetas(build_scenario(small(redraw_iqi=True), point=0))


def test_stderr_shrinks_with_trials():
    se = [run_point(small(trials=t), "iqu_mmse", asymptotics=False).mc_stderr for t in (8, 128)]
    assert 2.0 < se[0] / se[1] < 8.0


def test_loss_ratio():
    rows = run_sweep(small(receivers=("iqu_mmse", "mmse_no_iqi")), asymptotics=False)
    r = {x.receiver: x.mc_sum_rate for x in rows}
    assert np.isclose(loss_ratio(rows, 8), 1 - r["iqu_mmse"] / r["mmse_no_iqi"])


def test_receiver_setup_unknown():
    with pytest.raises(ValueError):
        receiver_setup(build_scenario(small()), "zf")


@pytest.mark.parametrize("bad", [dict(n_uts=0), dict(n_cells=3), dict(iqi_mode="tx"),
                                 dict(csi="blind"), dict(receivers=("zf",)), dict(sweep_var="k"),
                                 dict(eps=(0.2, 0.1)), dict(rho_ul_db=float("inf")),
                                 dict(sweep_values=())])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        small(**bad)


def test_config_dict_round_trip():
    c = small(iqi_mode=("bs_only", "both"))
    assert ScenarioConfig.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"antennas": 4})


@pytest.mark.parametrize("contamination", [True, False])
def test_simulation_tracks_theorems(contamination):
    # K = 10 as in the presets; with few UTs the per-user Jensen gap dominates
    c = small(n_antennas=64, n_uts=10, trials=40, contamination=contamination, sweep_values=(64,))
    for rx in ("iqu_mmse", "iqa_wlmmse"):
        r = run_point(c, rx)
        assert abs(r.asy_sum_rate / r.mc_sum_rate - 1) < 0.05
