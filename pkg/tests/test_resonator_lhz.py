import math
from itertools import product

import numpy as np
import pytest
from scipy.linalg import sqrtm

from kerrlhz.dynamics import evolve_schrodinger
from kerrlhz.lhz import IsingInstance, lhz_decompose3, lhz_embed4, random_instance
from kerrlhz.operators import StateVector, coherent_amplitudes, ladder_matrix
from kerrlhz.resonator_lhz import (
    ResonatorLhzParams,
    frame_phases,
    lab_frame_hamiltonian,
    mode_observables,
    project_to_cat_ising,
    resonator_lhz_anneal,
    resonator_lhz_hamiltonian,
    resonator_space,
    rotating_anneal_hamiltonian,
    to_rotating_frame,
)

INSTANCE = IsingInstance([-0.6, -0.4], [[0.0, -0.5], [-0.5, 0.0]])


def _params(**kw):
    return ResonatorLhzParams.from_ising(INSTANCE, 3.0, **kw)


def _embed(op, k, n, dim):
    mats = [np.eye(dim)] * n
    mats[k] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _product_coherent(signs, alpha, dim):
    v = coherent_amplitudes(signs[0] * alpha, dim)
    for s in signs[1:]:
        v = np.kron(v, coherent_amplitudes(s * alpha, dim))
    return v


def test_fig7_style_parameters():
    p = _params()
    assert p.n_resonators == 3
    assert np.allclose(p.alphas(), math.sqrt(2), rtol=1e-15)
    (triple, J), = p.triples
    assert triple == (0, 1, 2)
    assert J == pytest.approx(-0.53, abs=0.005)
    assert p.delta == (4.5,) * 3 and p.K == (10.0,) * 3 and p.eps_p == (-20.0,) * 3


def test_parameter_validation():
    with pytest.raises(ValueError):
        ResonatorLhzParams((1.0,), (1.0, 2.0), (1.0,), (0.0,), ())
    with pytest.raises(ValueError):
        ResonatorLhzParams((1.0,) * 3, (1.0,) * 3, (1.0,) * 3, (0.0,) * 3, (((0, 0, 1), 0.1),))
    with pytest.raises(ValueError):
        ResonatorLhzParams((1.0,), (0.0,), (1.0,), (0.0,), ()).alphas()


def test_four_body_embedding_rejected():
    with pytest.raises(ValueError):
        ResonatorLhzParams.from_embedding(lhz_embed4(random_instance(3, 1.0, 0), 3.0))
    p = ResonatorLhzParams.from_embedding(lhz_decompose3(lhz_embed4(random_instance(3, 1.0, 0), 3.0)))
    assert p.n_resonators == 7 and len(p.triples) == 4


def test_initial_ground_state_is_vacuum():
    dim = 4
    H = resonator_lhz_hamiltonian(_params(), 0.0, dim).matrix
    E, V = np.linalg.eigh(H)
    assert abs(V[0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert E[0] == pytest.approx(0.0, abs=1e-12)
    assert E[1] - E[0] == pytest.approx(4.5, abs=1e-12)


def test_final_hamiltonian_matches_explicit_construction():
    p = _params()
    dim, n = 4, 3
    a = ladder_matrix(dim)
    A = [_embed(a, k, n, dim) for k in range(n)]
    Ad = [x.conj().T for x in A]
    H = np.zeros((dim**n, dim**n), dtype=complex)
    for k in range(n):
        H += p.K[k] * Ad[k] @ Ad[k] @ A[k] @ A[k]
        H += p.eps_p[k] * (Ad[k] @ Ad[k] + A[k] @ A[k])
        H += p.eps_d[k] * (Ad[k] + A[k])
    for (i, j, k), J in p.triples:
        hop = Ad[i] @ Ad[j] @ A[k]
        H += J * (hop + hop.conj().T)
    assert np.allclose(resonator_lhz_hamiltonian(p, 1.0, dim).matrix, H, atol=1e-12)


def test_kerr_weight_constant_along_anneal():
    p = _params()
    dim = 3
    H0 = resonator_lhz_hamiltonian(p, 0.0, dim).matrix
    H1 = resonator_lhz_hamiltonian(p, 1.0, dim).matrix
    for s in (0.25, 0.5, 0.8):
        assert np.allclose(resonator_lhz_hamiltonian(p, s, dim).matrix, (1 - s) * H0 + s * H1, atol=1e-12)
    with pytest.raises(ValueError):
        resonator_lhz_hamiltonian(p, 1.2, dim)


def test_frame_phases_need_frequencies():
    with pytest.raises(ValueError):
        frame_phases(_params(), 1.0)
    p = _params(T=3.0, omega=(30.0, 34.0, 38.0))
    assert np.allclose(frame_phases(p, 0.0), 0.0)
    # at t = T the drive sits half a detuning below each resonator
    assert np.allclose(frame_phases(p, 3.0), (np.array([30.0, 34.0, 38.0]) - 4.5 / 2) * 3.0)


def test_lab_frame_hamiltonian_hermitian():
    p = _params(T=3.0, omega=(30.0, 34.0, 38.0))
    H = lab_frame_hamiltonian(p, 3)
    for t in (0.0, 1.1, 3.0):
        assert H.hermiticity_error(t) <= 1e-14


def test_lab_and_rotating_propagation_agree():
    p = _params(T=3.0, omega=(30.0, 34.0, 38.0))
    dim = 5
    space = resonator_space(3, dim)
    psi0 = np.zeros(dim**3, dtype=complex)
    psi0[0] = 1.0
    lab = evolve_schrodinger(lab_frame_hamiltonian(p, dim), StateVector(space, psi0), [0, p.T],
                             rel_tol=1e-10, abs_tol=1e-12).states[-1]
    rot = evolve_schrodinger(rotating_anneal_hamiltonian(p, dim), StateVector(space, psi0), [0, p.T],
                             rel_tol=1e-10, abs_tol=1e-12).states[-1]
    assert np.linalg.norm(to_rotating_frame(p, lab, p.T, dim) - rot) <= 1e-7


def test_zero_single_photon_drive_projects_to_zero_field():
    p = _params()
    q = ResonatorLhzParams(p.delta, p.K, p.eps_p, (0.0,) * 3, p.triples)
    assert project_to_cat_ising(q).h == (0.0, 0.0, 0.0)


def test_projection_of_fig7_set():
    proj = project_to_cat_ising(_params())
    assert proj.alpha == pytest.approx(math.sqrt(2))
    (_, C), = proj.C
    assert C == pytest.approx(-3.0, rel=1e-12)
    assert proj.h == pytest.approx((-0.6, -0.4, -0.5), rel=1e-12)
    assert proj.overlap_scale == pytest.approx(math.exp(-4))
    assert proj.valid


def test_drive_for_unit_field():
    emb = lhz_decompose3(lhz_embed4(IsingInstance([1.0, 0.0], [[0.0, 0.0], [0.0, 0.0]]), 3.0))
    p = ResonatorLhzParams.from_embedding(emb)
    assert p.eps_d[0] == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-15)
    assert p.eps_d[0] == pytest.approx(0.3536, abs=1e-4)


def test_projection_validity_flag():
    p = _params()
    strong = ResonatorLhzParams(p.delta, p.K, p.eps_p, (5.0, 0.0, 0.0), p.triples)
    assert not project_to_cat_ising(strong).valid


def _cat_basis(p, dim):
    alpha = p.alphas()[0]
    proj = project_to_cat_ising(p)
    vecs, ising = [], []
    for s in product((1, -1), repeat=3):
        vecs.append(_product_coherent(s, alpha, dim))
        ising.append(sum(h * x for h, x in zip(proj.h, s))
                     + sum(C * s[i] * s[j] * s[k] for (i, j, k), C in proj.C))
    const = sum(K * alpha**4 + 2 * e * alpha**2 for K, e in zip(p.K, p.eps_p))
    return np.array(vecs).T, np.array(ising), const, proj


def test_cat_subspace_expectations_match_projected_ising():
    p = _params()
    dim = 20
    B, ising, const, _ = _cat_basis(p, dim)
    H = resonator_lhz_hamiltonian(p, 1.0, dim).matrix
    diag = np.real(np.einsum("ik,ij,jk->k", B.conj(), H, B))
    assert np.max(np.abs(diag - const - ising)) <= 1e-8


def test_orthonormalized_cat_projection_within_overlap_scale():
    p = _params()
    dim = 16
    B, ising, const, proj = _cat_basis(p, dim)
    H = resonator_lhz_hamiltonian(p, 1.0, dim).matrix
    S = B.conj().T @ B
    Sm = np.linalg.inv(sqrtm(S))
    Heff = Sm @ (B.conj().T @ H @ B) @ Sm
    scale = np.max(np.abs(ising))
    assert np.max(np.abs(np.real(np.diag(Heff)) - const - ising)) <= proj.overlap_scale * scale
    off = Heff - np.diag(np.diag(Heff))
    assert np.max(np.abs(off)) <= proj.overlap_scale * scale


def test_mode_observables_on_product_coherent_state():
    dim, alpha = 14, 0.9
    v = _product_coherent((1, -1, 1), alpha, dim)
    v = v / np.linalg.norm(v)
    obs = mode_observables(3, dim)
    assert obs["re_a_1"](v) == pytest.approx(alpha, abs=1e-6)
    assert obs["re_a_2"](v) == pytest.approx(-alpha, abs=1e-6)
    assert obs["im_a_3"](v) == pytest.approx(0.0, abs=1e-12)
    assert obs["n_avg_3"](v) == pytest.approx(alpha**2, abs=1e-6)


@pytest.mark.filterwarnings("ignore:.*truncation may be visible")
def test_ground_state_fidelity_matches_dense_diagonalization():
    p = _params(T=0.5)
    dim = 5
    out = resonator_lhz_anneal(p, dim=dim, n_snapshots=3)
    H = resonator_lhz_hamiltonian(p, 1.0, dim).matrix
    _, V = np.linalg.eigh(H)
    target = _product_coherent(out.readout.signs, p.alphas()[0], dim)
    target = target / np.linalg.norm(target)
    assert out.ground_state_fidelity == pytest.approx(abs(np.vdot(target, V[:, 0])), abs=1e-10)
