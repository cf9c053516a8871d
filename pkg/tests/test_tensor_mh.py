import math

import numpy as np
import pytest

from tnmc.lattice import (OPEN, PERIODIC, CouplingField, build_lattice, energy,
                          random_spins, sample_disorder)
from tnmc.tensor_mh import (TensorMHSampler, conditional_vector, full_lattice,
                            member_grids, slabs, tiles)

from oracles import (all_configs, config_index, exact_conditional,
                     exact_distribution, pooled_chisquare_pvalue)


def test_member_grids_cover_and_partition():
    lat = build_lattice([4, 6], OPEN)
    for scheme in (full_lattice(), tiles(2, 2), tiles(3, 4), tiles(2, 5)):
        grids = member_grids(lat, scheme)
        sites = np.concatenate([g.ravel() for g in grids])
        assert sorted(sites.tolist()) == list(range(lat.n_sites))
    # one proposal per tile per sweep
    assert len(member_grids(build_lattice([4, 4], OPEN), tiles(2, 2))) == 4
    lat3 = build_lattice([3, 4, 5], PERIODIC)
    grids = member_grids(lat3, slabs(axis=0))
    assert len(grids) == 3
    sites = np.concatenate([g.ravel() for g in grids])
    assert sorted(sites.tolist()) == list(range(lat3.n_sites))
    with pytest.raises(NotImplementedError):
        member_grids(lat3, slabs(axis=0, thickness=2))


def test_conditional_vector_isolated_site():
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 1.0).scaled(0.0)
    p = conditional_vector(lat, c, {}, site=0)
    assert np.allclose(p, [0.5, 0.5])


def test_conditional_vector_single_bond():
    lat = build_lattice([2, 2], OPEN)
    K = 0.8
    edge_K = np.zeros(lat.n_edges)
    edge_K[lat.edge_id(0, 1)] = K
    c = CouplingField(edge_K, np.zeros(4))
    p = conditional_vector(lat, c, {1: 1}, site=0)
    expect = np.array([math.exp(K), math.exp(-K)])
    assert np.allclose(p, expect / expect.sum(), rtol=1e-12)


def test_conditional_vector_matches_enumeration():
    rng = np.random.default_rng(1)
    lat = build_lattice([3, 3], OPEN)
    for trial in range(8):
        c = sample_disorder(lat, "gaussian", 0.7, rng).with_field(
            rng.normal(0, 0.2, 9))
        n_obs = int(rng.integers(0, 9))
        order = rng.permutation(9)
        observed = {int(s): int(rng.integers(0, 2)) * 2 - 1
                    for s in order[:n_obs]}
        site = int(order[n_obs])
        p = conditional_vector(lat, c, observed, site, chi=None)
        expect = exact_conditional(lat, c, observed, site)
        assert np.allclose(p, expect, rtol=1e-10)


def test_conditional_vector_fully_observed_neighbors():
    rng = np.random.default_rng(2)
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "pm_J", 0.9, rng)
    observed = {s: int(rng.integers(0, 2)) * 2 - 1 for s in range(9) if s != 4}
    p = conditional_vector(lat, c, observed, 4, chi=None)
    expect = exact_conditional(lat, c, observed, 4)
    assert np.allclose(p, expect, rtol=1e-10)


def test_full_lattice_proposal_equals_boltzmann():
    rng = np.random.default_rng(3)
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "gaussian", 0.6, rng)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=None,
                              rng=np.random.default_rng(4))
    p_exact = exact_distribution(lat, c)
    spins = random_spins(9, rng)
    cl = sampler.clusters[0]
    for k, config in enumerate(all_configs(9)):
        spins[:] = config
        prop, _ = sampler.propose_cluster(spins, 0)
        assert math.exp(prop.log_q_rev) == pytest.approx(p_exact[k], rel=1e-10)


def test_tile_proposal_equals_conditional():
    rng = np.random.default_rng(5)
    lat = build_lattice([4, 4], OPEN)
    c = sample_disorder(lat, "pm_J", 0.5, rng)
    sampler = TensorMHSampler(lat, c, tiles(2, 2), chi=None,
                              rng=np.random.default_rng(6))
    spins = random_spins(16, rng)
    cl = sampler.clusters[1]
    members = cl.flat_sites
    # exact conditional of the block given the rest, by enumeration
    weights = []
    block_configs = all_configs(len(members))
    for row in block_configs:
        s = spins.copy()
        s[members] = row
        weights.append(math.exp(-energy(lat, c, s)))
    weights = np.array(weights)
    weights /= weights.sum()
    prop, _ = sampler.propose_cluster(spins, 1)
    cur = spins[members]
    assert math.exp(prop.log_q_rev) == pytest.approx(
        weights[config_index(cur)], rel=1e-10)


def test_proposals_deterministic_under_seed():
    lat = build_lattice([4, 4], OPEN)
    c = sample_disorder(lat, "ferro", 0.44)
    spins = random_spins(16, np.random.default_rng(7))
    a = TensorMHSampler(lat, c, full_lattice(), chi=4,
                        rng=np.random.default_rng(42))
    b = TensorMHSampler(lat, c, full_lattice(), chi=4,
                        rng=np.random.default_rng(42))
    pa, _ = a.propose_cluster(spins.copy(), 0)
    pb, _ = b.propose_cluster(spins.copy(), 0)
    assert np.array_equal(pa.block_spins, pb.block_spins)
    assert pa.log_q_fwd == pb.log_q_fwd
    assert pa.log_q_rev == pb.log_q_rev


def test_decoupled_proposal_logq():
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 1.0).scaled(0.0)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=None,
                              rng=np.random.default_rng(8))
    spins = random_spins(9, np.random.default_rng(9))
    prop, _ = sampler.propose_cluster(spins, 0)
    assert prop.log_q_fwd == pytest.approx(-9 * math.log(2), rel=1e-12)
    assert prop.log_q_rev == pytest.approx(-9 * math.log(2), rel=1e-12)


def test_perfect_sampler_accepts_everything():
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=None,
                              rng=np.random.default_rng(10))
    spins = random_spins(9, np.random.default_rng(11))
    for _ in range(300):
        rate, err, clamps = sampler.sweep(spins)
        assert rate == 1.0
        assert err == 0.0
        assert clamps == 0


def test_perfect_sampler_distribution():
    lat = build_lattice([2, 3], OPEN)
    c = sample_disorder(lat, "pm_J", 0.6, np.random.default_rng(12))
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=None,
                              rng=np.random.default_rng(13))
    spins = random_spins(6, np.random.default_rng(14))
    counts = np.zeros(64)
    for _ in range(20000):
        sampler.sweep(spins)
        counts[config_index(spins)] += 1
    assert pooled_chisquare_pvalue(counts, exact_distribution(lat, c)) > 1e-3


def test_truncated_chain_unbiased_mean_energy():
    # chi=1 proposals are crude; the accept step must still target the
    # exact distribution
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=1,
                              rng=np.random.default_rng(15))
    spins = random_spins(9, np.random.default_rng(16))
    energies = []
    rates = []
    for t in range(12000):
        rate, _, _ = sampler.sweep(spins)
        rates.append(rate)
        if t >= 200:
            energies.append(energy(lat, c, spins))
    assert 0.05 < np.mean(rates) < 1.0
    from tnmc.observables import integrated_autocorrelation
    e = np.array(energies)
    tau = max(float(integrated_autocorrelation(e)), 1.0)
    se = e.std() * math.sqrt(tau / len(e))
    from oracles import energy_by_config
    p = exact_distribution(lat, c)
    e_exact = float(np.dot(p, energy_by_config(lat, c)))
    assert abs(e.mean() - e_exact) < 4 * se + 1e-9


def test_tiles_chain_stationary():
    lat = build_lattice([2, 4], OPEN)
    c = sample_disorder(lat, "pm_J", 0.5, np.random.default_rng(17))
    sampler = TensorMHSampler(lat, c, tiles(2, 2), chi=None,
                              rng=np.random.default_rng(18))
    spins = random_spins(8, np.random.default_rng(19))
    counts = np.zeros(256)
    for t in range(60000):
        sampler.sweep(spins)
        if t % 2 == 0:
            counts[config_index(spins)] += 1
    assert pooled_chisquare_pvalue(counts, exact_distribution(lat, c)) > 1e-3


def test_periodic_wrap_bonds_via_extra():
    # 3x3 periodic: wrap bonds leave the open grid and must be handled as
    # in-block extra bonds; the MH step keeps the chain exact
    lat = build_lattice([3, 3], PERIODIC)
    c = sample_disorder(lat, "ferro", 0.35)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=None,
                              rng=np.random.default_rng(20))
    assert sum(len(v) for v in sampler.clusters[0].extra.values()) == 6
    spins = random_spins(9, np.random.default_rng(21))
    counts = np.zeros(512)
    rates = []
    for t in range(40000):
        rate, _, _ = sampler.sweep(spins)
        rates.append(rate)
        if t % 2 == 0:
            counts[config_index(spins)] += 1
    assert np.mean(rates) > 0.5  # wrap bonds only dent the proposal mildly
    assert pooled_chisquare_pvalue(counts, exact_distribution(lat, c)) > 1e-3


def test_slab_scheme_on_3d_lattice():
    lat = build_lattice([2, 2, 2], PERIODIC)
    c = sample_disorder(lat, "ferro", 0.2)
    sampler = TensorMHSampler(lat, c, slabs(axis=0), chi=None,
                              rng=np.random.default_rng(22))
    spins = random_spins(8, np.random.default_rng(23))
    counts = np.zeros(256)
    for t in range(60000):
        sampler.sweep(spins)
        if t % 2 == 0:
            counts[config_index(spins)] += 1
    assert pooled_chisquare_pvalue(counts, exact_distribution(lat, c)) > 1e-3


def test_detailed_balance_transition_counts():
    # under detailed balance the chain is reversible, so the count of
    # a->b transitions matches b->a within statistical error
    lat = build_lattice([2, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.45)
    sampler = TensorMHSampler(lat, c, full_lattice(), chi=1,
                              rng=np.random.default_rng(26))
    spins = random_spins(6, np.random.default_rng(27))
    n_states = 64
    trans = np.zeros((n_states, n_states))
    prev = config_index(spins)
    for _ in range(80000):
        sampler.sweep(spins)
        cur = config_index(spins)
        trans[prev, cur] += 1
        prev = cur
    diff = trans - trans.T
    tot = trans + trans.T
    mask = np.triu(tot, k=1) >= 16
    z = np.abs(diff[mask]) / np.sqrt(tot[mask])
    # 3-sigma per pair with a small multiple-comparison allowance
    assert np.mean(z < 3.0) > 0.99
    assert z.max() < 5.0


def test_acceptance_nondecreasing_in_chi():
    lat = build_lattice([8, 8], OPEN)
    c = sample_disorder(lat, "ferro", 0.4407)
    rates = []
    for chi in (1, 2, 4, 8):
        sampler = TensorMHSampler(lat, c, full_lattice(), chi=chi,
                                  rng=np.random.default_rng(24))
        spins = random_spins(64, np.random.default_rng(25))
        acc = [sampler.sweep(spins)[0] for _ in range(400)]
        rates.append(np.mean(acc[50:]))
    for lo, hi in zip(rates, rates[1:]):
        assert hi >= lo - 0.05
    assert rates[-1] > rates[0]
