import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrlhz.lhz import (
    AnnealProblem,
    IsingInstance,
    anneal_hamiltonian,
    brute_force_ground_states,
    direct_problem,
    gap_statistics,
    ising_energies,
    ising_hamiltonian,
    lhz_decompose3,
    lhz_embed4,
    minimum_gap,
    random_instance,
    spectrum_trace,
    transverse_field,
)

seeds = st.integers(min_value=0, max_value=2**63 - 1)


def _z(n):
    idx = np.arange(2**n)
    return 1.0 - 2.0 * ((idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1)


# --- instances ------------------------------------------------------------------

@given(seeds)
def test_instance_is_deterministic(seed):
    a = random_instance(3, 1.0, seed)
    b = random_instance(3, 1.0, seed)
    assert np.array_equal(a.h, b.h) and np.array_equal(a.J, b.J)


def test_instance_uniform_law():
    h = np.concatenate([random_instance(2, 1.0, s).h for s in range(5000)])
    assert h.size == 10**4
    assert np.all(np.abs(h) <= 1.0)
    sigma = 1 / math.sqrt(3) / math.sqrt(h.size)
    assert abs(h.mean()) <= 3 * sigma
    assert h.var() == pytest.approx(1 / 3, rel=0.05)


def test_instance_counts_and_shape():
    inst = random_instance(3, 0.5, 7)
    assert inst.h.shape == (3,)
    assert np.count_nonzero(np.triu(inst.J, 1)) == 3
    assert np.array_equal(inst.J, inst.J.T) and not np.any(np.diag(inst.J))
    assert np.all(np.abs(inst.h) <= 0.5) and np.all(np.abs(inst.J) <= 0.5)


def test_instance_validation():
    with pytest.raises(ValueError):
        random_instance(1)
    with pytest.raises(ValueError):
        IsingInstance([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        IsingInstance([0.0, 0.0], [[0.0, 1.0], [0.5, 0.0]])


def test_single_spin_hamiltonian():
    H = ising_hamiltonian(IsingInstance([1.0], [[0.0]])).matrix
    assert np.array_equal(H, np.diag([1.0, -1.0]).astype(complex))


def test_two_spin_coupling_hamiltonian():
    H = ising_hamiltonian(IsingInstance([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]])).matrix
    assert np.array_equal(H, np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex))


@given(seeds)
def test_ground_energy_matches_enumeration(seed):
    inst = random_instance(3, 1.0, seed)
    e_min, configs = brute_force_ground_states(inst)
    assert np.min(ising_energies(inst)) == pytest.approx(e_min, abs=1e-12)
    for c in configs:
        assert inst.energy(c) == pytest.approx(e_min, abs=1e-12)


# --- embeddings -----------------------------------------------------------------

@pytest.mark.parametrize("N,np4,nc4,np3,nc3", [(2, 3, 1, 3, 1), (3, 6, 3, 7, 4), (4, 10, 6, 13, 9)])
def test_embedding_counts(N, np4, nc4, np3, nc3):
    e4 = lhz_embed4(random_instance(N, 1.0, 0), 3.0)
    e3 = lhz_decompose3(e4)
    assert (e4.n_physical, e4.n_constraints) == (np4, nc4) == (N * (N + 1) // 2, N * (N - 1) // 2)
    assert (e3.n_physical, e3.n_constraints) == (np3, nc3) == (N * (N - 1) + 1, (N - 1) ** 2)
    assert all(len(c) == 3 for c in e3.constraints)
    ancillas = [k for k, lab in enumerate(e3.labels) if lab[0] == "ancilla"]
    for a in ancillas:
        assert sum(a in c for c in e3.constraints) == 2
        assert e3.fields[a] == 0.0


def test_fields_follow_ghost_routing():
    inst = random_instance(3, 1.0, 4)
    e4 = lhz_embed4(inst, 3.0)
    for k, (i, j) in enumerate(e4.labels):
        expected = inst.h[j - 1] if i == 0 else inst.J[i - 1, j - 1]
        assert e4.fields[k] == expected


def test_decompose_requires_four_body_input():
    e3 = lhz_decompose3(lhz_embed4(random_instance(3, 1.0, 0), 3.0))
    with pytest.raises(ValueError):
        lhz_decompose3(e3)


def test_constraints_square_to_identity_and_close():
    e4 = lhz_embed4(random_instance(3, 1.0, 0), 3.0)
    n = e4.n_physical
    Z = _z(n)
    total = np.ones(2**n)
    for c in e4.constraints:
        P = np.diag(np.prod(Z[list(c)], axis=0))
        assert np.array_equal(P @ P, np.eye(2**n))
        total = total * np.diag(P)
    # the product over all plaquettes is the product of the spins covered an odd number of times
    counts = np.zeros(n, dtype=int)
    for c in e4.constraints:
        counts[list(c)] += 1
    odd = np.flatnonzero(counts % 2)
    assert np.array_equal(total, np.prod(Z[odd], axis=0))


@given(seeds, st.sampled_from([1.5, 3.0]))
@settings(max_examples=30)
def test_constraint_subspace_reproduces_logical_energies(seed, C):
    inst = random_instance(3, 1.0, seed)
    e4 = lhz_embed4(inst, C)
    diag = np.real(np.diag(e4.operator().matrix))
    Z = _z(e4.n_physical)
    satisfied = np.all([np.prod(Z[list(c)], axis=0) == 1 for c in e4.constraints], axis=0)
    assert satisfied.sum() == 2**inst.N
    seen = set()
    for k in np.flatnonzero(satisfied):
        logical = e4.decode(Z[:, k])
        seen.add(logical)
        assert e4.encode(logical) == tuple(int(z) for z in Z[:, k])
        assert diag[k] == pytest.approx(inst.energy(logical) - C * e4.n_constraints, abs=1e-12)
    assert len(seen) == 2**inst.N


def test_ancilla_enumeration():
    C = 1.0
    for n, w, s, e in product((1, -1), repeat=4):
        best = min(-C * (n * w * a + a * s * e) for a in (1, -1))
        assert best == (-2 * C if n * w * s * e == 1 else 0.0)


@given(seeds, st.sampled_from([1.5, 3.0]))
@settings(max_examples=30, deadline=None)
def test_ground_state_decodes_to_logical_ground_state(seed, C):
    inst = random_instance(3, 1.0, seed)
    _, configs = brute_force_ground_states(inst)
    configs = {tuple(c) for c in configs}
    e4 = lhz_embed4(inst, C)
    for emb in (e4, lhz_decompose3(e4)):
        d = emb.field_diagonal() + C * emb.constraint_diagonal()
        k = int(np.argmin(d))
        assert emb.decode(_z(emb.n_physical)[:, k]) in configs


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_low_spectra_agree_at_strong_constraints(seed):
    inst = random_instance(3, 1.0, seed)
    C = 10.0
    e4 = lhz_embed4(inst, C)
    direct = np.sort(ising_energies(inst))
    for emb in (e4, lhz_decompose3(e4)):
        prob = AnnealProblem.from_embedding(emb)
        low = np.sort(prob.final_diagonal())[: 2**inst.N] - prob.offset
        assert np.allclose(low, direct, atol=1e-9)


def test_mapping_table_roles():
    e3 = lhz_decompose3(lhz_embed4(random_instance(3, 1.0, 0), 3.0))
    roles = [r["role"] for r in e3.mapping_table()]
    assert roles.count("field") == 3 and roles.count("coupling") == 3 and roles.count("ancilla") == 1


# --- anneal Hamiltonians and gaps -----------------------------------------------

def test_initial_hamiltonian_is_transverse_field():
    prob = AnnealProblem.from_embedding(lhz_embed4(random_instance(3, 1.0, 0), 3.0))
    H = anneal_hamiltonian(prob, 0.0, driver=1.0)
    assert np.array_equal(H, transverse_field(6))
    E, V = np.linalg.eigh(H)
    assert E[1] - E[0] == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(np.abs(V[:, 0]), 2**-3, atol=1e-12)


@pytest.mark.parametrize("protocol", ["ramp", "always-on"])
def test_final_hamiltonian_is_problem(protocol):
    e4 = lhz_embed4(random_instance(3, 1.0, 0), 3.0)
    prob = AnnealProblem.from_embedding(e4)
    H = anneal_hamiltonian(prob, 1.0, protocol)
    assert np.array_equal(H, np.real(e4.operator().matrix))


def test_always_on_keeps_constraints_at_start():
    prob = AnnealProblem.from_embedding(lhz_embed4(random_instance(3, 1.0, 0), 3.0))
    H = anneal_hamiltonian(prob, 0.0, "always-on")
    assert np.array_equal(np.diag(H), prob.constraint_diag)


def test_anneal_hamiltonian_validation():
    prob = direct_problem(random_instance(2, 1.0, 0))
    with pytest.raises(ValueError):
        anneal_hamiltonian(prob, 1.5)
    with pytest.raises(ValueError):
        anneal_hamiltonian(prob, 0.5, "sideways")


def _single_spin():
    return AnnealProblem(1, np.array([1.0, -1.0]), np.zeros(2), 0.0, "single")


def test_single_spin_gap_curve():
    s = np.linspace(0, 1, 21)
    tr = spectrum_trace(_single_spin(), s, 2)
    assert np.allclose(tr.energies[:, 1] - tr.energies[:, 0], 2 * np.sqrt((1 - s) ** 2 + s**2), atol=1e-12)
    assert tr.gap_min == pytest.approx(math.sqrt(2), abs=1e-12)
    assert tr.s_at_gap == pytest.approx(0.5)


def test_single_spin_minimum_gap():
    g, s = minimum_gap(_single_spin())
    assert g == pytest.approx(math.sqrt(2), abs=1e-10)
    assert s == pytest.approx(0.5, abs=1e-4)


def test_flat_traces_for_constant_diagonal():
    prob = AnnealProblem(2, np.zeros(4), np.array([0.0, 1.0, 2.0, 3.0]), 0.0, "flat")
    tr = spectrum_trace(prob, np.linspace(0, 1, 7), 4, "always-on", driver=0.0)
    assert np.allclose(tr.energies, [0, 1, 2, 3], atol=0)


def test_spectrum_trace_sorted_and_bounded():
    prob = AnnealProblem.from_embedding(lhz_embed4(random_instance(3, 1.0, 2), 3.0))
    tr = spectrum_trace(prob, np.linspace(0, 1, 11), 8)
    assert np.all(np.diff(tr.energies, axis=1) >= -1e-12)
    assert tr.gap_min >= 0
    with pytest.raises(ValueError):
        spectrum_trace(prob, [0.5], 100)


def test_degenerate_endpoint_excluded():
    # no field: the final spectrum is doubly degenerate, so s = 1 itself is never reported
    prob = AnnealProblem(2, np.array([-1.0, 1.0, 1.0, -1.0]), np.zeros(4), 0.0, "pair")
    g, s = minimum_gap(prob)
    assert s < 1.0
    tr = spectrum_trace(prob, np.linspace(0, 1, 11), 2)
    assert tr.s_at_gap < 1.0 and tr.gap_min > 0


def test_gap_statistics_deterministic_and_ordered():
    a = gap_statistics(2, 3, [1.5, 3.0], seed=5)
    b = gap_statistics(2, 3, [1.5, 3.0], seed=5)
    assert a == b
    assert len(a) == 2 * 2 * 3
    assert [r.seed for r in a[:6]] == [5] * 6
    assert all(r.gap_min >= 0 for r in a)
