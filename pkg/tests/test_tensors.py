import math

import numpy as np
import pytest

from tnmc.decomposition import boltzmann_matrix
from tnmc.lattice import OPEN, build_lattice, sample_disorder
from tnmc.tensors import (DenseTensor, IndefiniteFactor, basis_vector,
                          boundary_mps_contract, build_site_tensors, contract,
                          delta_core, network_rows, sqrt_boltzmann,
                          svd_truncate)

from oracles import partition_log


def test_contract_identity_examples():
    eye = DenseTensor(np.eye(2), ("a", "b"))
    vec = DenseTensor(np.array([3.0, 4.0]), ("x",))
    out = contract(eye, "b", vec, "x")
    assert np.allclose(out.data, [3, 4])
    A = DenseTensor(np.array([[1.0, 2.0], [3.0, 4.0]]), ("i", "j"))
    out = contract(A, "j", eye, "a")
    assert np.allclose(out.data, A.data)
    delta3 = DenseTensor(delta_core(3), ("i", "j", "k"))
    ones = DenseTensor(np.array([1.0, 1.0]), ("k",))
    out = contract(delta3, "k", ones, "k")
    assert np.allclose(out.data, np.eye(2))


def test_contract_log_scales_add_and_mismatch_raises():
    a = DenseTensor(np.eye(2), ("i", "j"), log_scale=1.5)
    b = DenseTensor(np.ones(2), ("j",), log_scale=-0.5)
    assert contract(a, "j", b, "j").log_scale == pytest.approx(1.0)
    bad = DenseTensor(np.ones(3), ("j",))
    with pytest.raises(ValueError):
        contract(a, "j", bad, "j")


def test_sqrt_boltzmann_reconstruction():
    for K in (0.0, 0.5, 1.3):
        B = boltzmann_matrix(K)
        r = sqrt_boltzmann(B)
        assert np.abs(r @ r - B).max() < 1e-12
        assert np.allclose(r, r.T)
    assert np.allclose(sqrt_boltzmann(np.eye(2)), np.eye(2))


def test_sqrt_boltzmann_indefinite():
    with pytest.raises(IndefiniteFactor):
        sqrt_boltzmann(boltzmann_matrix(-0.4))


def test_svd_truncate():
    rank1 = np.outer([1.0, 2.0], [3.0, 4.0])
    _, _, _, err = svd_truncate(rank1, 1)
    assert err == pytest.approx(0.0, abs=1e-14)
    _, _, _, err = svd_truncate(np.eye(4), 2)
    assert err == pytest.approx(math.sqrt(2 / 4))
    rng = np.random.default_rng(0)
    M = rng.normal(size=(5, 3))
    U, s, Vt, err = svd_truncate(M, 3)
    assert err == 0.0
    assert np.allclose((U * s) @ Vt, M)


def _site_rows(lattice, coupling, observed=None, sampling_site=None):
    tset = build_site_tensors(lattice, coupling, observed or {}, sampling_site)
    return network_rows(tset), tset


def test_boundary_mps_matches_enumeration_ferro():
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 0.5)
    rows, _ = _site_rows(lat, c)
    out = boundary_mps_contract(rows, chi=16)
    logz = math.log(out.data) + out.log_scale
    assert logz == pytest.approx(partition_log(lat, c), rel=1e-10)


def test_boundary_mps_matches_enumeration_random_couplings():
    # chi = 2^L is already exact; chi=None skips compression entirely
    rng = np.random.default_rng(21)
    for dims, chi in (([3, 3], None), ([3, 4], None), ([4, 4], 16)):
        lat = build_lattice(dims, OPEN)
        c = sample_disorder(lat, "gaussian", 0.8, rng).with_field(
            rng.normal(0, 0.2, lat.n_sites))
        rows, _ = _site_rows(lat, c)
        out = boundary_mps_contract(rows, chi=chi)
        logz = math.log(out.data) + out.log_scale
        assert logz == pytest.approx(partition_log(lat, c), rel=1e-10)


def test_boundary_mps_decoupled_partition():
    L = 4
    lat = build_lattice([L, L], OPEN)
    c = sample_disorder(lat, "ferro", 1.0).scaled(0.0)
    rows, _ = _site_rows(lat, c)
    out = boundary_mps_contract(rows, chi=8)
    logz = math.log(out.data) + out.log_scale
    assert logz == pytest.approx(L * L * math.log(2), rel=1e-12)
    # rank-1 network: chi=1 and chi=4 agree exactly
    out1 = boundary_mps_contract(rows, chi=1)
    assert math.log(out1.data) + out1.log_scale == pytest.approx(logz, rel=1e-12)


def test_boundary_mps_truncated_close_at_modest_chi():
    lat = build_lattice([4, 4], OPEN)
    c = sample_disorder(lat, "ferro", 0.4407)
    rows, _ = _site_rows(lat, c)
    exact = boundary_mps_contract(rows, chi=None)
    approx = boundary_mps_contract(rows, chi=2)
    lz_exact = math.log(exact.data) + exact.log_scale
    lz_approx = math.log(approx.data) + approx.log_scale
    assert abs(lz_exact - lz_approx) < 0.05
    assert approx.truncation_error >= 0.0


def test_log_scale_bookkeeping():
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.3)
    rows, _ = _site_rows(lat, c)
    base = boundary_mps_contract(rows, chi=None)
    factor = 3.0
    n_tensors = sum(1 for row in rows for _ in row)
    scaled = [[DenseTensor(t.data * factor, t.axes, t.log_scale) for t in row]
              for row in rows]
    out = boundary_mps_contract(scaled, chi=None)
    got = math.log(out.data) + out.log_scale
    want = math.log(base.data) + base.log_scale + n_tensors * math.log(factor)
    assert got == pytest.approx(want, rel=1e-12)


def test_site_tensor_defining_sums():
    # corner / edge / bulk tensors must equal the explicit factor sums
    lat = build_lattice([3, 3], OPEN)
    c = sample_disorder(lat, "ferro", 0.7)
    tset = build_site_tensors(lat, c, {})
    r = sqrt_boltzmann(boltzmann_matrix(0.7))
    corner = np.einsum("sm,sn->mn", r, r)
    edge = np.einsum("sm,sn,so->mno", r, r, r)
    bulk = np.einsum("sm,sn,so,sp->mnop", r, r, r, r)
    t00 = tset.tensors[lat.site_id((0, 0))]
    assert t00.axes == ("right", "up")
    assert np.abs(t00.data - corner).max() < 1e-12
    t01 = tset.tensors[lat.site_id((0, 1))]
    assert t01.axes == ("right", "up", "left")
    assert np.abs(np.sort(t01.data.ravel()) - np.sort(edge.ravel())).max() < 1e-12
    t11 = tset.tensors[lat.site_id((1, 1))]
    assert t11.axes == ("down", "right", "up", "left")
    assert np.abs(np.sort(t11.data.ravel()) - np.sort(bulk.ravel())).max() < 1e-12


def test_observed_site_caps():
    # single bond, neighbor observed up: remaining weight is the bond column
    lat = build_lattice([2, 2], OPEN)
    c = sample_disorder(lat, "ferro", 0.9)
    tset = build_site_tensors(lat, c, {lat.site_id((0, 1)): 1,
                                       lat.site_id((1, 0)): 1,
                                       lat.site_id((1, 1)): 1},
                              sampling_site=lat.site_id((0, 0)))
    t = tset.tensors[lat.site_id((0, 0))]
    assert t.axes == ("sample",)
    ratio = t.data[0] / t.data[1]
    assert ratio == pytest.approx(math.exp(2 * 0.9 * 2), rel=1e-10)  # two bonds


def test_contract_order_independence():
    rng = np.random.default_rng(33)
    A = DenseTensor(rng.normal(size=(2, 3)), ("i", "j"))
    B = DenseTensor(rng.normal(size=(3, 4)), ("j", "k"))
    C = DenseTensor(rng.normal(size=(4, 2)), ("k", "l"))
    left = contract(contract(A, "j", B, "j"), "k", C, "k")
    right = contract(A, "j", contract(B, "k", C, "k"), "j")
    assert np.allclose(left.value(), right.value(), rtol=1e-10)


def test_basis_vector():
    assert np.allclose(basis_vector(1), [1, 0])
    assert np.allclose(basis_vector(-1), [0, 1])
    with pytest.raises(ValueError):
        basis_vector(0)
