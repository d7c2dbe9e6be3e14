"""
Tests for the shooting oracle: closed-form lengths and masses against direct
integration of the ODE, and reconstructed profiles.
"""
from types import SimpleNamespace

import numpy as np
import pytest

from app.core.exceptions import DomainError, EventNotFound
from app.schemas.model import ModelParams
from app.services import ode_oracle
from app.services.ode_oracle import halfline_mass
from app.services.scalar_model import peak, soliton, soliton_mass
from app.services.singular_quadrature import upper_endpoint


class TestShooting:
    def test_turning_point_matches_length(self, oracle, ground_state):
        shot = oracle.shoot_compact_edge(3.0, 2.0, 0.5)
        assert shot.ell_hit == pytest.approx(ground_state.length_L(3.0, 2.0, 0.5), rel=1e-7)
        assert shot.hamiltonian_drift < 1e-9

    def test_turning_value_is_upper_endpoint(self, oracle):
        shot = oracle.shoot_compact_edge(4.0, 0.5, 0.8)
        x, u, v = shot.samples[-1]
        assert x == pytest.approx(shot.ell_hit)
        assert u == pytest.approx(upper_endpoint(4.0, 0.5, 0.8), rel=1e-8)
        assert abs(v) < 1e-8
        values = [s[1] for s in shot.samples]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_tighter_tolerance_is_more_accurate(self, oracle, ground_state):
        exact = ground_state.length_L(6.0, 2.0, 0.3)
        loose = oracle.shoot_compact_edge(6.0, 2.0, 0.3, rtol=1e-6, atol=1e-8)
        tight = oracle.shoot_compact_edge(6.0, 2.0, 0.3, rtol=1e-11, atol=1e-13)
        assert abs(tight.ell_hit - exact) <= abs(loose.ell_hit - exact) + 1e-12

    def test_edge_mass_matches_mu1(self, oracle, ground_state):
        shot = oracle.shoot_compact_edge(6.0, 0.5, 0.9)
        assert shot.mass_edge == pytest.approx(ground_state.mu1(6.0, 0.9, 0.5), rel=1e-7)

    def test_tadpole_theta1(self, oracle, ground_state):
        params = ModelParams.tadpole(6.0)
        assert oracle.shot_theta1(params, 0.9) == pytest.approx(ground_state.mass_theta1(params, 0.9), rel=1e-6)

    def test_missing_event(self, oracle, monkeypatch):
        def no_event(*args, **kwargs):
            return SimpleNamespace(success=True, t_events=[np.array([])], message="horizon reached")

        monkeypatch.setattr(ode_oracle.integrate, "solve_ivp", no_event)
        with pytest.raises(EventNotFound):
            oracle.shoot_compact_edge(4.0, 2.0, 0.5)

    def test_domain(self, oracle):
        with pytest.raises(DomainError):
            oracle.shoot_compact_edge(4.0, 2.0, peak(4.0))
        with pytest.raises(DomainError):
            oracle.shoot_compact_edge(4.0, 0.0, 0.5)


class TestHalfline:
    @pytest.mark.parametrize("p", [3.0, 6.0])
    def test_full_halfline(self, p):
        assert halfline_mass(p, 0.0) == pytest.approx(0.5 * soliton_mass(p), rel=1e-9)

    def test_shifted_halfline_is_soliton_tail(self, ground_state):
        for y in (0.3, 2.0):
            z = soliton(4.0, y)
            assert halfline_mass(4.0, y) == pytest.approx(ground_state.mu2(4.0, z), rel=1e-8)

    def test_negative_shift(self):
        with pytest.raises(DomainError):
            halfline_mass(4.0, -1.0)


class TestOracleTable:
    def test_small_table(self, oracle, graph_params):
        params = graph_params(4.0)
        rows = oracle.oracle_table(params, z_values=[0.3, 0.8, 1.2])
        assert [r.z for r in rows] == [0.3, 0.8, 1.2]
        for row in rows:
            assert row.length_rel_err < 1e-7
            assert row.theta1_rel_err < 1e-6
            assert row.hamiltonian_drift < 1e-9

    def test_rejects_raw_graph(self, oracle):
        with pytest.raises(DomainError):
            oracle.oracle_table(ModelParams.raw(4.0, 1.5), z_values=[0.5])

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [2.5, 3.0, 4.0, 6.0, 8.0])
    def test_default_grid(self, oracle, graph_params, p):
        rows = oracle.oracle_table(graph_params(p), workers=2)
        assert len(rows) == 10
        assert max(r.length_rel_err for r in rows) < 1e-7
        assert max(r.theta1_rel_err for r in rows) < 1e-6


class TestProfile:
    def test_t_graph_profile(self, oracle, ground_state):
        params = ModelParams.t_graph(4.0)
        lam = 2.0
        profile = oracle.reconstruct_profile(params, lam)
        h1, h2, pendant = profile.edges
        assert [e.edge for e in profile.edges] == ["h1", "h2", "e1"]
        # continuity and Kirchhoff at the vertex
        for edge in profile.edges:
            assert edge.u[0] == pytest.approx(profile.vertex_value, rel=1e-9)
        assert h1.du[0] + h2.du[0] + pendant.du[0] == pytest.approx(0.0, abs=1e-7 * abs(pendant.du[0]))
        # maximum at the pendant tip, with a vanishing slope there
        assert max(pendant.u) == pendant.u[-1]
        assert pendant.x[-1] == pytest.approx(1.0)
        assert abs(pendant.du[-1]) < 1e-7
        record = ground_state.assemble(params, lam)
        assert profile.mass == pytest.approx(record.theta, rel=1e-4)

    def test_tadpole_profile(self, oracle, ground_state):
        params = ModelParams.tadpole(6.0)
        lam = 0.5
        profile = oracle.reconstruct_profile(params, lam)
        half, loop = profile.edges
        assert loop.x[-1] == pytest.approx(2.0)
        assert loop.u[0] == pytest.approx(loop.u[-1], rel=1e-12)
        # outgoing derivatives: half-line, loop start, and the loop end read backwards
        assert half.du[0] + loop.du[0] - loop.du[-1] == pytest.approx(0.0, abs=1e-7 * abs(loop.du[0]))
        middle = len(loop.u) // 2
        assert max(loop.u) == loop.u[middle]
        record = ground_state.assemble(params, lam)
        assert profile.mass == pytest.approx(record.theta, rel=1e-4)

    def test_scaling_identity(self, oracle, ground_state):
        """Θ(p, λ) = λ^α Θ₁ recomputed from the shot edge and the soliton tails."""
        for p, lam in [(3.0, 0.5), (5.0, 4.0), (8.0, 1.0)]:
            params = ModelParams.t_graph(p)
            record = ground_state.assemble(params, lam)
            shot_mass = oracle.shot_theta1(params, record.phase.z)
            assert lam ** record.alpha * shot_mass == pytest.approx(record.theta, rel=1e-6)

    def test_rejects_bad_input(self, oracle):
        with pytest.raises(DomainError):
            oracle.reconstruct_profile(ModelParams.t_graph(4.0), -1.0)
        with pytest.raises(DomainError):
            oracle.reconstruct_profile(ModelParams.raw(4.0, 1.0), 1.0)
