import math

import numpy as np
import pytest

from tnmc.cluster_gibbs import (BondRuleConfig, find_clusters,
                                field_sw_config, ghost_observable_transform,
                                ghost_sw_config, log_flip_ratio,
                                niedermayer_config, sample_bonds, sw_config,
                                tg_step, wolff_config)
from tnmc.decomposition import FREE, LOCK_ANTIPARALLEL, LOCK_PARALLEL, sw_params
from tnmc.lattice import OPEN, build_lattice, random_spins, sample_disorder

from oracles import (cluster_conditional_weights, config_index,
                     exact_distribution, pooled_chisquare_pvalue)


def _run_chain(lattice, coupling, config, n_steps, seed, transform=None,
               thin=1):
    """Record the chain every ``thin`` steps; thinning keeps the recorded
    samples effectively independent so the chi-square test is calibrated."""
    rng = np.random.default_rng(seed)
    spins = random_spins(lattice.n_sites, rng)
    ghost = 1
    counts = np.zeros(2 ** lattice.n_sites)
    for t in range(n_steps):
        spins, ghost, _ = tg_step(lattice, coupling, spins, config, rng, ghost)
        if t % thin == 0:
            s = ghost_observable_transform(spins, ghost) if transform else spins
            counts[config_index(s)] += 1
    return counts


def test_bond_state_legality():
    lat = build_lattice([4, 4], OPEN)
    rng = np.random.default_rng(0)
    c = sample_disorder(lat, "pm_J", 0.7, rng)
    cfg = sw_config(c)
    i, j = lat.edges[:, 0], lat.edges[:, 1]
    for _ in range(200):
        spins = random_spins(lat.n_sites, rng)
        states, _ = sample_bonds(lat, c, spins, cfg, rng)
        par = spins[i] == spins[j]
        assert not np.any((states == LOCK_PARALLEL) & ~par)
        assert not np.any((states == LOCK_ANTIPARALLEL) & par)


def test_single_spin_limit_all_free():
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.8)
    cfg = BondRuleConfig(np.exp(c.edge_K), np.exp(-c.edge_K))
    rng = np.random.default_rng(1)
    spins = random_spins(lat.n_sites, rng)
    states, _ = sample_bonds(lat, c, spins, cfg, rng)
    assert np.all(states == FREE)


def test_strong_coupling_locks_parallel():
    lat = build_lattice([8, 8], OPEN)
    c = sample_disorder(lat, "ferro", 4.0)
    cfg = sw_config(c)
    rng = np.random.default_rng(2)
    spins = np.ones(lat.n_sites, dtype=np.int8)
    states, _ = sample_bonds(lat, c, spins, cfg, rng)
    assert np.mean(states == LOCK_PARALLEL) > 0.999 - 3e-3


def test_max_free_anti_never_locks_antiparallel():
    lat = build_lattice([4, 4], OPEN)
    c = sample_disorder(lat, "ferro", 0.9)
    cfg = sw_config(c)  # free_anti = e^-K is the maximum
    rng = np.random.default_rng(3)
    for _ in range(100):
        spins = random_spins(lat.n_sites, rng)
        states, _ = sample_bonds(lat, c, spins, cfg, rng)
        assert not np.any(states == LOCK_ANTIPARALLEL)


def test_find_clusters_limits():
    lat = build_lattice([2, 2], OPEN)
    all_free = np.full(lat.n_edges, FREE)
    part = find_clusters(lat, all_free)
    assert part.n_clusters == lat.n_sites
    all_locked = np.full(lat.n_edges, LOCK_PARALLEL)
    part = find_clusters(lat, all_locked)
    assert part.n_clusters == 1
    one_locked = np.full(lat.n_edges, FREE)
    one_locked[0] = LOCK_PARALLEL
    part = find_clusters(lat, one_locked)
    assert part.n_clusters == 3


def test_flip_ratio_symmetric_cases():
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    cfg = sw_config(c)  # free_par == free_anti
    rng = np.random.default_rng(4)
    spins = random_spins(lat.n_sites, rng)
    states, _ = sample_bonds(lat, c, spins, cfg, rng)
    part = find_clusters(lat, states)
    for cid in range(part.n_clusters):
        assert log_flip_ratio(lat, c, spins, part, cid, cfg) == 0.0


def test_flip_ratio_always_current_on_zero_weight():
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    cfg = BondRuleConfig(np.full(lat.n_edges, 0.8), np.zeros(lat.n_edges))
    spins = np.ones(lat.n_sites, dtype=np.int8)
    states = np.full(lat.n_edges, FREE)
    states[0] = LOCK_PARALLEL
    part = find_clusters(lat, states)
    cid = part.labels[lat.edges[0][0]]
    assert log_flip_ratio(lat, c, spins, part, cid, cfg) == math.inf


def _random_bond_rule(lattice, coupling, rng):
    par = np.array([rng.uniform(0, math.exp(K)) for K in coupling.edge_K])
    anti = np.array([rng.uniform(0, math.exp(-K)) for K in coupling.edge_K])
    # keep weights strictly positive so ratios stay finite
    return BondRuleConfig(np.maximum(par, 1e-3), np.maximum(anti, 1e-3))


def test_flip_ratio_matches_product_oracle():
    """Support-two property and the ratio, against the locked-edge product
    formula, on random 4x4 instances."""
    rng = np.random.default_rng(5)
    lat = build_lattice([4, 4], OPEN)
    checked = 0
    for trial in range(40):
        c = sample_disorder(lat, "pm_J", 0.6, rng)
        cfg = _random_bond_rule(lat, c, rng)
        spins = random_spins(lat.n_sites, rng)
        states, _ = sample_bonds(lat, c, spins, cfg, rng)
        part = find_clusters(lat, states)
        decs = [type("D", (), {"free_par": cfg.free_par[e],
                               "free_anti": cfg.free_anti[e]})()
                for e in range(lat.n_edges)]
        for cid in range(part.n_clusters):
            members = np.nonzero(part.labels[:lat.n_sites] == cid)[0]
            if not 1 < len(members) <= 10:
                continue
            configs, weights = cluster_conditional_weights(
                lat, c, decs, states, members, spins)
            nz = weights > 0
            assert nz.sum() <= 2
            cur = spins[members]
            k_cur = config_index(cur)
            k_flip = config_index(-cur)
            assert weights[k_cur] > 0
            ratio = weights[k_cur] / weights[k_flip]
            logr = log_flip_ratio(lat, c, spins, part, cid, cfg)
            assert math.exp(logr) == pytest.approx(ratio, rel=1e-10)
            checked += 1
    assert checked >= 50


def test_flip_ratio_matches_oracle_with_ghost():
    rng = np.random.default_rng(6)
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5).with_field(
        np.full(9, 0.3))
    cfg = ghost_sw_config(c)
    checked = 0
    for trial in range(30):
        spins = random_spins(lat.n_sites, rng)
        ghost = 1 if rng.random() < 0.5 else -1
        states, gstates = sample_bonds(lat, c, spins, cfg, rng, ghost)
        part = find_clusters(lat, states, gstates)
        decs = [sw_params(K) for K in c.edge_K]
        from tnmc.decomposition import ghost_sw_params
        gdec = ghost_sw_params(0.3)
        for cid in range(part.n_clusters):
            members = list(np.nonzero(part.labels[:lat.n_sites] == cid)[0])
            if part.labels[lat.n_sites] == cid:
                members = members + [lat.n_sites]
            if not 1 < len(members) <= 8:
                continue
            configs, weights = cluster_conditional_weights(
                lat, c, decs, states, members, spins, ghost_dec=gdec,
                ghost_states=gstates, ghost_spin=ghost)
            cur = np.array([spins[m] if m < lat.n_sites else ghost
                            for m in members])
            ratio = weights[config_index(cur)] / weights[config_index(-cur)]
            logr = log_flip_ratio(lat, c, spins, part, cid, cfg, ghost)
            assert math.exp(logr) == pytest.approx(ratio, rel=1e-10)
            checked += 1
    assert checked >= 10


def test_stationarity_sw_small():
    lat = build_lattice([2, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    counts = _run_chain(lat, c, sw_config(c), 30000, seed=7)
    p = exact_distribution(lat, c)
    assert pooled_chisquare_pvalue(counts, p) > 1e-3


def test_stationarity_niedermayer_small():
    lat = build_lattice([2, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    counts = _run_chain(lat, c, niedermayer_config(c, 1.0), 30000, seed=8)
    p = exact_distribution(lat, c)
    assert pooled_chisquare_pvalue(counts, p) > 1e-3


def test_stationarity_wolff_small():
    lat = build_lattice([2, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    counts = _run_chain(lat, c, wolff_config(c), 30000, seed=9)
    p = exact_distribution(lat, c)
    assert pooled_chisquare_pvalue(counts, p) > 1e-3


def test_stationarity_field_in_ratio():
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 0.4).with_field(np.full(4, 0.25))
    counts = _run_chain(lat, c, field_sw_config(c), 30000, seed=10)
    p = exact_distribution(lat, c)
    assert pooled_chisquare_pvalue(counts, p) > 1e-3


def test_stationarity_ghost_field():
    # ghost-mode chain measured through the ghost transform must match the
    # plain field model
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 0.4).with_field(np.full(4, 0.25))
    counts = _run_chain(lat, c, ghost_sw_config(c), 120000, seed=11,
                        transform=True, thin=3)
    p = exact_distribution(lat, c)
    assert pooled_chisquare_pvalue(counts, p) > 1e-3


def test_infinite_temperature_is_uniform():
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 1.0).scaled(0.0)
    counts = _run_chain(lat, c, sw_config(c), 20000, seed=12)
    assert pooled_chisquare_pvalue(counts, np.full(16, 1 / 16)) > 1e-3


def test_wolff_always_flips_at_sw_point():
    lat = build_lattice([4, 4], OPEN)
    c = sample_disorder(lat, "ferro", 0.6)
    cfg = wolff_config(c)
    rng = np.random.default_rng(13)
    spins = random_spins(lat.n_sites, rng)
    for _ in range(50):
        before = spins.copy()
        spins, _, stats = tg_step(lat, c, spins, cfg, rng)
        assert stats.flip_fraction == 1.0
        assert np.any(before != spins)


def test_ghost_transform_invariance():
    rng = np.random.default_rng(14)
    spins = random_spins(12, rng)
    a = ghost_observable_transform(spins, -1)
    b = ghost_observable_transform(-spins, 1)
    assert np.array_equal(a, b)
    assert np.array_equal(ghost_observable_transform(spins, 1), spins)
