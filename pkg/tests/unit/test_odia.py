"""Unit tests for odia module."""

import numpy as np
import pytest

from src.channel import ConfigurationError, generate_drop
from src.matlin import random_orthonormal_basis
from src.models import NetworkConfig, OrthonormalBasis
from src.odia import (
    DegenerateDropError,
    compute_cell_decisions,
    interference_stack,
    receive_beamformer,
    run_odia_cell_selection,
    select_users_odia,
    zf_precoder,
)


@pytest.fixture
def cfg():
    """K=3, M=4, L=2, S=2 network with 10 users per cell."""
    return NetworkConfig(K=3, N=10, M=4, L=2, S=2, snr_db=20.0, seed=3)


@pytest.fixture
def drop(cfg):
    """First drop of the standard network."""
    return generate_drop(cfg, 0)


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(99)


@pytest.mark.unit
class TestReceiveBeamformer:
    """Tests for the leakage-minimising receive beamformer."""

    def test_perfect_nulling_when_l_exceeds_interference(self):
        """Test K=2, S=1, L=2 nulls the single interfering stream."""
        cfg = NetworkConfig(K=2, N=3, M=2, L=2, S=1, snr_db=10.0, seed=1)
        drop = generate_drop(cfg, 0)
        decision = receive_beamformer(drop, 0, 1)

        assert decision.eta == pytest.approx(0.0, abs=1e-20)
        assert np.linalg.norm(decision.u.conj() @ drop.effective[1, 0, 1]) < 1e-10

    def test_unit_norm_and_decomposition(self, drop):
        """Test ||u|| = 1 and eta equals the sum of per-cell terms."""
        decision = receive_beamformer(drop, 1, 4)

        assert np.linalg.norm(decision.u) == pytest.approx(1.0, abs=1e-12)
        assert decision.eta_per_cell.shape == (2,)
        assert decision.eta == pytest.approx(decision.eta_per_cell.sum(), abs=1e-10)

    def test_per_cell_terms_match_definition(self, drop):
        """Test eta_per_cell[k] = ||u^H H_k P_k||^2 for k ≠ i."""
        decision = receive_beamformer(drop, 0, 2)
        expected = [
            np.linalg.norm(decision.u.conj() @ drop.effective[k, 0, 2]) ** 2 for k in (1, 2)
        ]

        np.testing.assert_allclose(decision.eta_per_cell, expected, atol=1e-12)

    def test_effective_channel(self, drop):
        """Test f = (u^H H_i P_i)^H."""
        decision = receive_beamformer(drop, 2, 7)
        expected = (decision.u.conj() @ drop.H[2, 2, 7] @ drop.P[2].matrix).conj()

        np.testing.assert_allclose(decision.f, expected, atol=1e-12)
        assert decision.f_gain == pytest.approx(np.linalg.norm(expected) ** 2)

    def test_brute_force_minimality(self, drop, rng):
        """Test no random unit beamformer leaks less than eta."""
        decision = receive_beamformer(drop, 0, 0)
        G = interference_stack(drop, 0)[0]
        directions = rng.standard_normal((1000, 2)) + 1j * rng.standard_normal((1000, 2))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)

        leak = np.sum(np.abs(directions.conj() @ G.conj().T) ** 2, axis=1)
        assert np.all(decision.eta <= leak + 1e-9)

    def test_batched_matches_single(self, drop):
        """Test the batched cell computation agrees with per-user calls."""
        cell = compute_cell_decisions(drop)[1]

        for j in (0, 5, 9):
            single = receive_beamformer(drop, 1, j)
            batched = cell.decision(j)
            assert batched.eta == pytest.approx(single.eta, abs=1e-12)
            np.testing.assert_allclose(batched.u, single.u, atol=1e-12)
            np.testing.assert_allclose(batched.f, single.f, atol=1e-12)

    def test_bad_index_raises(self, drop):
        """Test out-of-range users are rejected."""
        with pytest.raises(IndexError):
            receive_beamformer(drop, 0, 10)


@pytest.mark.unit
class TestSelectUsersOdia:
    """Tests for smallest-metric selection."""

    def test_picks_smallest(self):
        """Test [0.3, 0.1, 0.2] with S=2 selects [1, 2]."""
        assert select_users_odia([0.3, 0.1, 0.2], 2) == [1, 2]

    def test_ties_go_to_lower_index(self):
        """Test all-equal metrics select [0, 1]."""
        assert select_users_odia([0.5, 0.5, 0.5], 2) == [0, 1]

    def test_matches_full_sort(self, rng):
        """Test the selected metrics are the S smallest of a full sort."""
        for _ in range(200):
            metrics = rng.exponential(size=12)
            chosen = select_users_odia(metrics, 3)
            np.testing.assert_array_equal(metrics[chosen], np.sort(metrics)[:3])

    def test_too_few_users_raises(self):
        """Test N < S is a configuration error."""
        with pytest.raises(ConfigurationError):
            select_users_odia([0.1], 2)


@pytest.mark.unit
class TestZfPrecoder:
    """Tests for zero-forcing precoding."""

    def test_scalar_case(self):
        """Test S=1, f=2 gives gamma = 4 and F V = 2."""
        P = OrthonormalBasis(matrix=np.array([[1.0], [0.0]]))
        precoder = zf_precoder(np.array([[2.0]]), P)

        assert precoder.gamma[0] == pytest.approx(4.0)
        assert (np.array([[2.0]]) @ precoder.V)[0, 0] == pytest.approx(2.0)

    def test_identity_channel(self, rng):
        """Test F = I gives V = I and unit gains."""
        P = random_orthonormal_basis(3, 2, rng)
        precoder = zf_precoder(np.eye(2), P)

        np.testing.assert_allclose(precoder.V, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(precoder.gamma, [1.0, 1.0], atol=1e-12)

    def test_random_channel_is_diagonalised(self, rng):
        """Test F V = diag(sqrt(gamma)) and unit per-stream power."""
        P = random_orthonormal_basis(4, 2, rng)
        F = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        precoder = zf_precoder(F, P)
        product = F @ precoder.V

        assert np.max(np.abs(product - np.diag(np.diag(product)))) < 1e-10
        np.testing.assert_allclose(np.diag(product), np.sqrt(precoder.gamma), atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(precoder.W, axis=0), 1.0, atol=1e-9)

    def test_fewer_users_uses_right_inverse(self, rng):
        """Test a 1 x 2 channel still gets an exact ZF column."""
        P = random_orthonormal_basis(4, 2, rng)
        F = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
        precoder = zf_precoder(F, P)

        assert precoder.W.shape[1] == 1
        assert abs((F @ precoder.V)[0, 0]) == pytest.approx(np.sqrt(precoder.gamma[0]))
        assert np.linalg.norm(precoder.W[:, 0]) == pytest.approx(1.0, abs=1e-9)

    def test_no_users_gives_empty_precoder(self, rng):
        """Test an empty channel transmits nothing."""
        P = random_orthonormal_basis(4, 2, rng)
        precoder = zf_precoder(np.zeros((0, 2)), P)

        assert precoder.W.shape == (4, 0)

    def test_singular_channel_is_degenerate(self, rng):
        """Test a rank-one F raises DegenerateDropError."""
        P = random_orthonormal_basis(3, 2, rng)

        with pytest.raises(DegenerateDropError):
            zf_precoder(np.array([[1.0, 1.0], [2.0, 2.0]]), P, cell=1)


@pytest.mark.unit
class TestRunOdiaCellSelection:
    """Tests for the full per-drop ODIA pipeline."""

    def test_single_user_cells(self):
        """Test N=1, S=1 selects the only user in each cell."""
        cfg = NetworkConfig(K=2, N=1, M=2, L=1, S=1, snr_db=10.0, seed=4)
        outcome, precoders = run_odia_cell_selection(generate_drop(cfg, 0), cfg)

        assert outcome.selected == ((0,), (0,))
        assert len(precoders) == 2
        assert outcome.outage is False

    def test_zf_exactness_at_selected_users(self, cfg):
        """Test intra-cell interference at selected users vanishes."""
        for index in range(20):
            drop = generate_drop(cfg, index)
            outcome, precoders = run_odia_cell_selection(drop, cfg)
            for i, chosen in enumerate(outcome.decisions):
                for position, decision in enumerate(chosen):
                    row = np.abs(decision.f.conj() @ precoders[i].V) ** 2
                    leak = np.delete(row, position).sum()
                    assert leak < 1e-18 * precoders[i].gamma[position]

    def test_selected_users_are_distinct(self, drop, cfg):
        """Test each cell serves S distinct users."""
        outcome, _ = run_odia_cell_selection(drop, cfg)

        for users in outcome.selected:
            assert len(users) == cfg.S
            assert len(set(users)) == cfg.S

    def test_more_users_lower_leakage(self, cfg):
        """Test the mean selected eta falls as N grows."""

        def mean_selected_eta(n):
            network = cfg.with_changes(N=n)
            values = []
            for index in range(100):
                outcome, _ = run_odia_cell_selection(generate_drop(network, index), network)
                values.extend(d.eta for chosen in outcome.decisions for d in chosen)
            return np.mean(values)

        assert mean_selected_eta(100) < mean_selected_eta(10)
