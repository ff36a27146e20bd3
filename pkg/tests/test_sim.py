import numpy as np
import pytest

from conftest import path_graph, star_graph
from forkwatch.graph import NetworkGraph, gen_regular
from forkwatch.honest import analyze_honest, expected_wins, fork_rate
from forkwatch.metrics import binomial_se
from forkwatch.propagation import MiningProfile
from forkwatch.selfish import SelfishConfig, gamma_sm, pool_members, selfish_revenue
from forkwatch.sim import (
    SimOptions,
    measure_fork_rate,
    measure_w_process,
    mining_events,
    simulate_honest,
    simulate_selfish,
)


def check_report(rep):
    assert sum(rep.per_node_mr) == pytest.approx(1.0, abs=1e-12)
    assert 0 <= rep.fork_rate_sim <= 1
    assert rep.canonized_height <= rep.blocks_total
    assert rep.blocks_total == rep.canonized_height + rep.stale_blocks
    assert rep.canonization_count == sum(rep.w_counts)


def test_single_node():
    g = NetworkGraph.from_edges(1, [])
    rep = simulate_honest(g, MiningProfile(np.array([0.01])), 10**6, seed=3)
    check_report(rep)
    assert rep.per_node_mr == [1.0] and rep.fork_rate_sim == 0
    assert measure_w_process(rep) == [1.0]


def test_two_nodes_never_fork():
    rep = simulate_honest(path_graph(2), MiningProfile.uniform(2, 0.02), 10**6, seed=4)
    check_report(rep)
    assert measure_fork_rate(rep) == 0
    assert rep.per_node_mr == pytest.approx([0.5, 0.5], abs=0.01)
    assert measure_w_process(rep) == pytest.approx([0.5, 0.5], abs=0.01)


def test_path_fork_rate_and_w_process():
    p = 0.01
    g = path_graph(3)
    mp = MiningProfile.uniform(3, 3 * p)
    rep = simulate_honest(g, mp, 2 * 10**6, seed=5)
    check_report(rep)
    assert rep.fork_rate_sim == pytest.approx(2 * p / 3, rel=0.15)
    w = measure_w_process(rep)
    n = rep.canonization_count
    for got, want in zip(w, expected_wins(g, mp)):
        assert abs(got - want) <= 3 * binomial_se(want, n)


def test_determinism_and_seed_sensitivity():
    g = gen_regular(30, 4, seed=2)
    mp = MiningProfile.uniform(30, 0.05)
    a = simulate_honest(g, mp, 200_000, seed=11).to_dict()
    b = simulate_honest(g, mp, 200_000, seed=11).to_dict()
    c = simulate_honest(g, mp, 200_000, seed=12).to_dict()
    assert a == b and a != c


@pytest.mark.parametrize(
    "options",
    [SimOptions(mining="independent"), SimOptions(tie_break="lowest_id"), SimOptions("independent", "lowest_id")],
)
def test_alternative_conventions_run(options):
    g = gen_regular(20, 4, seed=2)
    rep = simulate_honest(g, MiningProfile.uniform(20, 0.05), 100_000, seed=1, options=options)
    check_report(rep)
    assert rep.options == {"mining": options.mining, "tie_break": options.tie_break}


def test_bad_options_and_inputs():
    with pytest.raises(ValueError):
        SimOptions(mining="poisson")
    with pytest.raises(ValueError):
        SimOptions(tie_break="coin")
    with pytest.raises(ValueError):
        simulate_honest(path_graph(3), MiningProfile.uniform(2, 0.02), 10, seed=0)
    with pytest.raises(ValueError):
        simulate_honest(path_graph(3), MiningProfile.uniform(3, 0.03), 0, seed=0)


@pytest.mark.parametrize("mode", ["merged", "independent"])
def test_mining_events_marginals(mode):
    rates = np.array([0.01, 0.03, 0.06])
    slots = 10**6
    at, who = mining_events(rates, slots, np.random.default_rng(0), mode)
    assert at == sorted(at) and all(0 <= s < slots for s in at)
    counts = np.bincount(who, minlength=3)
    expected = rates * slots
    assert np.all(np.abs(counts - expected) <= 4 * np.sqrt(expected))
    if mode == "merged":
        assert len(set(at)) == len(at)


@pytest.mark.slow
def test_matches_analysis_on_regular_graph():
    g = gen_regular(100, 4, seed=1)
    mp = MiningProfile.uniform(100, 0.01)
    rep = simulate_honest(g, mp, 3 * 10**6, seed=1)
    check_report(rep)
    assert rep.fork_rate_sim == pytest.approx(fork_rate(g, mp), rel=0.15)
    # the analysis is conservative: simulated gains and losses lie beyond it
    ana = analyze_honest(g, mp)
    shares = mp.shares
    n = rep.canonized_height
    for i in range(100):
        ew, mr = ana.expected_win[i], rep.per_node_mr[i]
        se = binomial_se(ew, n)
        if ew > shares[i]:
            assert mr >= ew - 3 * se
        elif ew < shares[i]:
            assert mr <= ew + 3 * se


def _star_pool(alpha, leaves=4, total=0.01):
    g = star_graph(leaves)
    rates = np.full(leaves + 1, total * (1 - alpha) / leaves)
    rates[0] = total * alpha
    return g, MiningProfile(rates), SelfishConfig(frozenset({0}), alpha)


def test_star_center_pool_wins_every_race():
    g, mp, sc = _star_pool(0.2)
    assert gamma_sm(g, sc, mp) == 1.0
    rep = simulate_selfish(g, mp, sc, 2 * 10**6, seed=2)
    check_report(rep)
    assert rep.gamma_samples > 100
    assert rep.gamma_sim >= 0.95
    assert rep.pool == 0


def test_large_pool_with_full_reach_takes_majority():
    g, mp, sc = _star_pool(0.45)
    rep = simulate_selfish(g, mp, sc, 10**6, seed=3)
    assert selfish_revenue(0.45, 1.0)[0] > 0.5
    assert rep.pool_revenue_share > 0.5


@pytest.mark.slow
def test_selfish_run_tracks_chain_prediction():
    g = gen_regular(100, 4, seed=1)
    mp = MiningProfile.uniform(100, 0.01)
    members = pool_members(g, "descending_degree", 0.22)
    sc = SelfishConfig(members, 0.22)
    rep = simulate_selfish(g, mp, sc, 10**7, seed=1)
    check_report(rep)
    _, rmg_ana = selfish_revenue(0.22, gamma_sm(g, sc, mp))
    assert abs(rep.pool_rmg - rmg_ana) <= 0.05
    assert abs(rep.gamma_sim - gamma_sm(g, sc, mp)) <= 0.05


@pytest.mark.slow
@pytest.mark.xfail(
    strict=True,
    reason="break-even at 22/100 is instance specific; this G_R(100,4) instance "
    "breaks even near 0.18, so its RMG at 0.22 is about +0.09",
)
def test_break_even_near_022():
    g = gen_regular(100, 4, seed=1)
    mp = MiningProfile.uniform(100, 0.01)
    sc = SelfishConfig(pool_members(g, "descending_degree", 0.22), 0.22)
    rep = simulate_selfish(g, mp, sc, 10**7, seed=1)
    assert abs(rep.pool_rmg) <= 0.05
