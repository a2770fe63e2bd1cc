import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinfock.fock import DensityMatrix, FockError, FockSpace, NumericalFailure, StateVector, expectation, second_moment, tensor
from twinfock.states import make_psi1
from twinfock.witness import (
    SamplerConfig,
    WitnessReport,
    build_stokes,
    calibrated_sy_signs,
    evaluate_criterion,
    gain_adjusted_criterion,
    proof_chain,
    psi1_stokes,
    reports_to_csv,
    separable_mixture,
    separable_sampler,
    spin_coherent,
    truncation_leak,
)

SPACE = FockSpace.uniform(4, 3)
ALICE, BOB = psi1_stokes(SPACE)


def random_exact_state(rng, space=SPACE):
    """Random pure state on the blocks where both sides' Stokes algebra is exact."""
    a = ALICE.exact_block_mask() & BOB.exact_block_mask()
    amps = (rng.normal(size=space.dimension) + 1j * rng.normal(size=space.dimension)) * a
    return StateVector(space, amps).normalized()


def test_stokes_on_single_side():
    space = FockSpace((2, 2))
    s = build_stokes(space, 0, 1, "Alice")
    vac = StateVector.vacuum(space)
    for op in s.components:
        assert expectation(vac, op) == 0
    up = StateVector.basis(space, (1, 0))
    assert expectation(up, s.sz).real == pytest.approx(0.5)
    assert expectation(up, s.casimir()).real == pytest.approx(0.75)
    assert all(op.is_hermitian() for op in s.components)
    with pytest.raises(FockError):
        build_stokes(space, 0, 0, "Alice")


def test_su2_algebra_exact_below_cutoff():
    space = FockSpace((4, 4))
    s = build_stokes(space, 0, 1, "Alice")
    mask = s.exact_block_mask()
    comm = (s.sx @ s.sy - s.sy @ s.sx).dense()
    rhs = (1j * s.sz).dense()
    assert np.allclose(comm[np.ix_(mask, mask)], rhs[np.ix_(mask, mask)], atol=1e-14)
    cas = s.casimir().dense()
    n = s.total_number.dense().real.diagonal()
    expected = (n / 2) * (n / 2 + 1)
    assert np.allclose(np.diag(cas)[mask], expected[mask], atol=1e-13)


def test_calibrated_sign_is_recorded_convention():
    assert calibrated_sy_signs() == (1, 1)
    assert "+i" in ALICE.convention()


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_psi1_common_eigenstate(lam):
    psi = make_psi1(lam, 14 if lam < 0.6 else 20, tail_tol=None)
    alice, bob = psi1_stokes(psi.space)
    # the algebra is exact only on blocks below the cutoff
    mask = alice.exact_block_mask() & bob.exact_block_mask()
    psi = StateVector(psi.space, np.where(mask, psi.amplitudes, 0)).normalized()
    for d in (bob.sx - alice.sx, bob.sy + alice.sy, bob.sz - alice.sz):
        assert np.linalg.norm((d @ psi).amplitudes) <= 1e-10


def test_witness_examples():
    psi = make_psi1(0.5)
    rep = evaluate_criterion(psi, *psi1_stokes(psi.space))
    assert rep.lhs == pytest.approx(0, abs=1e-10)
    assert rep.rhs == pytest.approx(2 / 3, abs=1e-10)
    assert rep.witness == pytest.approx(-2 / 3, abs=1e-9)
    assert rep.detected

    vac = evaluate_criterion(StateVector.vacuum(SPACE), ALICE, BOB)
    assert (vac.lhs, vac.rhs, vac.witness) == (0, 0, 0)
    assert not vac.detected

    one = StateVector.basis(SPACE, (0, 1, 0, 0))  # one photon in a+
    rep = evaluate_criterion(one, ALICE, BOB)
    assert rep.lhs == pytest.approx(0.75)
    assert rep.rhs == pytest.approx(0.5)
    assert rep.witness == pytest.approx(0.25)


def test_truncation_leak_is_refused():
    state = StateVector.basis(SPACE, (0, 2, 0, 2))  # Alice total 4 > cutoff 3
    assert truncation_leak(state, ALICE, BOB) == 1
    with pytest.raises(NumericalFailure):
        evaluate_criterion(state, ALICE, BOB)


def test_gain_examples():
    psi = make_psi1(0.5)
    alice, bob = psi1_stokes(psi.space)
    plain = evaluate_criterion(psi, alice, bob)
    unit = gain_adjusted_criterion(psi, alice, bob, 1.0, 1.0)
    assert unit.lhs == plain.lhs and unit.rhs == plain.rhs
    g = gain_adjusted_criterion(psi, alice, bob, 1.7, 1.7)
    assert g.lhs == pytest.approx(0, abs=1e-10)
    assert g.rhs == pytest.approx(1.7 * plain.rhs)
    with pytest.raises(FockError):
        gain_adjusted_criterion(psi, alice, bob, 0.0, 1.0)


def test_report_roundtrip_and_csv():
    rep = evaluate_criterion(make_psi1(0.3), *psi1_stokes(make_psi1(0.3).space))
    back = WitnessReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    text = reports_to_csv([rep])
    header, row = text.strip().split("\n")
    assert header.split(",") == list(WitnessReport.CSV_FIELDS)
    assert row.endswith("true")


# --- proof chain -------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_proof_chain_expansion_and_casimir(seed):
    psi = random_exact_state(np.random.default_rng(seed))
    pc = proof_chain(psi, ALICE, BOB)
    lhs = evaluate_criterion(psi, ALICE, BOB).lhs
    assert pc["expanded_lhs"] == pytest.approx(lhs, abs=1e-10)
    assert pc["j2"] == pytest.approx(pc["casimir_bob"], abs=1e-10)
    assert pc["s2"] == pytest.approx(pc["casimir_alice"], abs=1e-10)
    assert np.linalg.norm(pc["mean_j"]) <= pc["n_bob"] / 2 + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_product_states_factorise(seed):
    rng = np.random.default_rng(seed)
    side = FockSpace.uniform(2, 3)
    mask = side.mode_occupations(0) + side.mode_occupations(1) <= 3

    def draw():
        amps = (rng.normal(size=side.dimension) + 1j * rng.normal(size=side.dimension)) * mask
        return StateVector(side, amps).normalized()

    b, a = draw(), draw()
    psi = StateVector(SPACE, tensor(b, a).tensor().transpose(0, 2, 1, 3).ravel())
    pc = proof_chain(psi, ALICE, BOB)
    assert pc["cross"] == pytest.approx(float(pc["mean_j"] @ pc["mean_s_tilde"]), abs=1e-10)
    assert evaluate_criterion(psi, ALICE, BOB).witness >= -1e-9


# --- separable sampler -------------------------------------------------------


def test_sampler_weights_and_determinism():
    s = separable_mixture(7)
    assert s.weights.sum() == pytest.approx(1, abs=1e-12)
    s2 = separable_mixture(7)
    assert np.array_equal(s.rho.entries, s2.rho.entries)
    s.rho.validate()


def test_single_vacuum_product_is_on_the_boundary():
    cfg = SamplerConfig(cutoff=2)
    vac = DensityMatrix.from_state(StateVector.vacuum(FockSpace.uniform(4, 2)))
    alice, bob = psi1_stokes(vac.space)
    assert evaluate_criterion(vac, alice, bob).witness == 0
    assert cfg.cutoff == 2


def test_aligned_spin_coherent_pairs_saturate_the_bound():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(0, 4))
        a = spin_coherent(n, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi), 3)
        b = StateVector(a.space, a.amplitudes.conj())
        psi = StateVector(SPACE, tensor(b, a).tensor().transpose(0, 2, 1, 3).ravel())
        assert evaluate_criterion(psi, ALICE, BOB).witness == pytest.approx(0, abs=1e-12)


def test_separable_samples_respect_bound():
    alice, bob = psi1_stokes(FockSpace.uniform(4, 4))
    for seed in range(60):
        assert evaluate_criterion(separable_sampler(seed), alice, bob).witness >= -1e-9


def test_entangled_state_violates_while_sampled_mixtures_do_not():
    # lhs of the correlated state is zero, so even a small admixture of it is detected
    psi = make_psi1(0.4, 3, tail_tol=None)
    alice, bob = psi1_stokes(psi.space)
    leak_free = StateVector(psi.space, np.where(alice.exact_block_mask() & bob.exact_block_mask(), psi.amplitudes, 0)).normalized()
    assert evaluate_criterion(leak_free, alice, bob).detected
    assert second_moment(leak_free, bob.sz - alice.sz) == pytest.approx(0, abs=1e-20)
