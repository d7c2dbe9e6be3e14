"""
Tests for the stability service: verdicts, the p = 6 structure, transition
scans and the phase diagram.
"""
import math

import numpy as np
import pytest

from app.core.exceptions import DomainError, NonConvergence
from app.schemas.model import GraphKind, ModelParams
from app.schemas.stability import Direction, TransitionPattern, VerdictKind
from app.services import stability as stability_module
from app.services.stability import _pattern, _sign_runs, pinfty_sign_function


class TestLambdaStar:
    def test_definition(self, stability, ground_state):
        assert stability.lambda_star(6.0, 2.0) == pytest.approx(ground_state.length_L(6.0, 2.0, 1.0) ** 2)

    def test_extremes(self, stability):
        assert stability.lambda_star(50.0, 2.0) < 0.5
        assert stability.lambda_star(2.01, 2.0) > 10.0


class TestClassify:
    def test_classify_state_assembles_once(self, stability, monkeypatch):
        calls = []
        original = stability_module.GroundStateService.assemble

        def counting(self, params, lambda_, z_hint=None):
            calls.append(lambda_)
            return original(self, params, lambda_, z_hint=z_hint)

        monkeypatch.setattr(stability_module.GroundStateService, "assemble", counting)
        record, verdict = stability.classify_state(ModelParams.tadpole(4.0), 0.5)
        assert calls == [0.5]
        assert verdict.dtheta_dlambda == record.dtheta_dlambda
        assert verdict.kind is VerdictKind.STABLE

    @pytest.mark.parametrize("lam", [1e-3, 1e3])
    def test_subcritical_is_stable(self, stability, graph_params, lam):
        assert stability.classify(graph_params(4.0), lam).kind is VerdictKind.STABLE

    def test_critical_t_graph(self, stability):
        params = ModelParams.t_graph(6.0)
        assert stability.classify(params, 100.0).kind is VerdictKind.STABLE
        assert stability.classify(params, 1e-3).kind is VerdictKind.UNSTABLE

    def test_critical_tadpole(self, stability):
        params = ModelParams.tadpole(6.0)
        assert stability.classify(params, 100.0).kind is VerdictKind.UNSTABLE
        assert stability.classify(params, 1e-3).kind is VerdictKind.STABLE

    def test_near_degenerate_window(self, stability):
        params = ModelParams.t_graph(4.0)
        lam_star = stability.lambda_star(4.0, params.theta)
        verdict = stability.classify(params, lam_star * (1.0 + 1e-4))
        assert verdict.kind is VerdictKind.NEAR_DEGENERATE
        assert verdict.lambda_star_distance == pytest.approx(1e-4 * lam_star, rel=1e-6)
        assert verdict.diagnostic


class TestCriticalExponent:
    def test_turning_z_in_unit_interval(self, stability, ground_state):
        z0 = stability.p6_turning_z(GraphKind.T_GRAPH)
        assert 0.0 < z0 < 1.0
        params = ModelParams.t_graph(6.0)
        assert ground_state.dmass_theta1_dz(params, 0.9 * z0) < 0.0
        assert ground_state.dmass_theta1_dz(params, min(1.1 * z0, 0.5 * (z0 + 1.0))) > 0.0

    def test_F_equals_G_at_turning_point(self, stability):
        z0 = stability.p6_turning_z(GraphKind.T_GRAPH)
        assert stability.eval_F(z0) == pytest.approx(stability.eval_G(z0), rel=1e-6)

    def test_split_of_F(self, stability):
        for z in (0.1, 0.5, 0.9):
            assert stability.eval_F1(z) + stability.eval_F2(z) == pytest.approx(stability.eval_F(z), rel=1e-8, abs=1e-10)

    def test_F_decreasing_G_increasing(self, stability):
        zs = np.linspace(0.02, 0.98, 50)
        F = [stability.eval_F(float(z)) for z in zs]
        G = [stability.eval_G(float(z)) for z in zs]
        assert all(a > b for a, b in zip(F, F[1:]))
        assert all(a < b for a, b in zip(G, G[1:]))

    def test_F_G_domain(self, stability):
        with pytest.raises(DomainError):
            stability.eval_F(1.2)
        with pytest.raises(DomainError):
            stability.eval_G(0.0)

    def test_positive_above_one(self, ground_state):
        params = ModelParams.t_graph(6.0)
        for z in np.linspace(1.0, 3.0 ** 0.25 - 0.01, 15):
            assert ground_state.dmass_theta1_dz(params, float(z)) > 0.0

    def test_turning_frequencies(self, stability):
        assert stability.find_p6_turning_point(GraphKind.T_GRAPH) > 0.0
        assert stability.find_p6_turning_point(GraphKind.TADPOLE) > 0.0


class TestSignFunctions:
    def test_values(self):
        assert pinfty_sign_function(GraphKind.T_GRAPH, 2.0) == pytest.approx(4.0 / 3.0, rel=1e-14)
        assert pinfty_sign_function(GraphKind.TADPOLE, 0.0) == pytest.approx(math.log(1.0 / 3.0), rel=1e-14)

    def test_signs(self):
        for xi in np.linspace(1.01, 2.0, 40):
            assert pinfty_sign_function(GraphKind.T_GRAPH, float(xi)) > 0.0
        for xi in np.linspace(0.0, 0.99, 40):
            assert pinfty_sign_function(GraphKind.TADPOLE, float(xi)) < 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            pinfty_sign_function(GraphKind.T_GRAPH, 0.5)
        with pytest.raises(DomainError):
            pinfty_sign_function(GraphKind.TADPOLE, 1.0)


class TestSignRuns:
    def test_pattern_from_runs(self):
        signs = [1, 1, 1, -1, -1, 0, 1, 1]
        runs = _sign_runs(signs, min_points=2)
        assert [r[0] for r in runs] == [1, -1, 1]
        assert runs[1] == (-1, 3, 4)
        assert _pattern([r[0] for r in runs]) is TransitionPattern.SUS

    def test_isolated_flip_is_dropped(self):
        runs = _sign_runs([-1, -1, 1, -1, -1, -1], min_points=2)
        assert runs == [(-1, 0, 5)]
        assert _pattern([r[0] for r in runs]) is TransitionPattern.MONOTONE

    def test_patterns(self):
        assert _pattern([-1, 1, -1]) is TransitionPattern.USU
        assert _pattern([1, -1]) is TransitionPattern.SINGLE_SWITCH
        assert _pattern([1, -1, 1, -1]) is TransitionPattern.OTHER
        assert _pattern([]) is TransitionPattern.MONOTONE


class TestTransitions:
    def test_rejects_bad_range(self, stability):
        with pytest.raises(DomainError):
            stability.detect_transitions(ModelParams.t_graph(4.0), lambda_range=(1.0, 0.5))
        with pytest.raises(DomainError):
            stability.detect_transitions(ModelParams.t_graph(4.0), n_scan=8)

    def test_subcritical_monotone(self, stability):
        report = stability.detect_transitions(ModelParams.tadpole(4.0), n_scan=24)
        assert report.pattern is TransitionPattern.MONOTONE
        assert report.sign_changes == []

    @pytest.mark.slow
    @pytest.mark.parametrize("graph", [GraphKind.T_GRAPH, GraphKind.TADPOLE])
    def test_just_above_critical(self, stability, graph):
        report = stability.detect_transitions(ModelParams(p=6.05, graph=graph))
        assert report.pattern is TransitionPattern.USU
        assert [c.direction for c in report.sign_changes] == [Direction.TO_STABLE, Direction.TO_UNSTABLE]

    @pytest.mark.slow
    @pytest.mark.parametrize("graph", [GraphKind.T_GRAPH, GraphKind.TADPOLE])
    def test_just_below_critical(self, stability, graph):
        report = stability.detect_transitions(ModelParams(p=5.95, graph=graph))
        assert report.pattern is TransitionPattern.SUS

    @pytest.mark.slow
    def test_critical_single_switch(self, stability):
        t_report = stability.detect_transitions(ModelParams.t_graph(6.0))
        assert t_report.pattern is TransitionPattern.SINGLE_SWITCH
        assert t_report.sign_changes[0].direction is Direction.TO_STABLE
        lam0 = stability.find_p6_turning_point(GraphKind.T_GRAPH)
        assert t_report.sign_changes[0].lambda_ == pytest.approx(lam0, rel=1e-4)

        tadpole_report = stability.detect_transitions(ModelParams.tadpole(6.0))
        assert tadpole_report.pattern is TransitionPattern.SINGLE_SWITCH
        assert tadpole_report.sign_changes[0].direction is Direction.TO_UNSTABLE

    @pytest.mark.slow
    def test_pattern_stable_under_refinement(self, stability):
        params = ModelParams.t_graph(6.05)
        coarse = stability.detect_transitions(params, n_scan=64)
        fine = stability.detect_transitions(params, n_scan=256)
        assert coarse.pattern is fine.pattern


class TestPhaseDiagram:
    def test_small_grid(self, stability):
        diagram = stability.phase_diagram(GraphKind.T_GRAPH, lambda_grid=[1e-3, 1.0, 1e2], p_grid=[3.0, 8.0])
        assert len(diagram.cells) == 2
        assert all(len(row) == 3 for row in diagram.cells)
        assert all(v.kind is VerdictKind.STABLE for v in (diagram.cells[0][0], diagram.cells[0][2]))
        assert diagram.cells[1][0].kind is VerdictKind.UNSTABLE
        assert diagram.lambda_star[0] == pytest.approx(stability.lambda_star(3.0, 2.0))

    def test_cell_failure_is_inconclusive(self, stability, monkeypatch):
        original = stability_module.GroundStateService.assemble

        def flaky(self, params, lambda_, z_hint=None):
            if lambda_ == 1.0:
                raise NonConvergence("forced failure", {"lambda": lambda_})
            return original(self, params, lambda_, z_hint=z_hint)

        monkeypatch.setattr(stability_module.GroundStateService, "assemble", flaky)
        diagram = stability.phase_diagram(GraphKind.TADPOLE, lambda_grid=[0.1, 1.0, 10.0], p_grid=[4.0])
        cell = diagram.cells[0][1]
        assert cell.kind is VerdictKind.INCONCLUSIVE
        assert math.isnan(cell.dtheta_dlambda)
        assert "forced failure" in cell.diagnostic
        assert diagram.cells[0][2].kind is VerdictKind.STABLE

    def test_raw_math_error_is_inconclusive(self, stability, monkeypatch):
        original = stability_module.GroundStateService._assemble

        def broken(self, params, lambda_, z_hint):
            if lambda_ == 1.0:
                raise ValueError("math domain error")
            return original(self, params, lambda_, z_hint)

        monkeypatch.setattr(stability_module.GroundStateService, "_assemble", broken)
        diagram = stability.phase_diagram(GraphKind.TADPOLE, lambda_grid=[0.1, 1.0, 10.0], p_grid=[4.0])
        assert [cell.kind for cell in diagram.cells[0]] == [
            VerdictKind.STABLE, VerdictKind.INCONCLUSIVE, VerdictKind.STABLE,
        ]
        assert "math domain error" in diagram.cells[0][1].diagnostic

    def test_rejects_bad_grids(self, stability):
        with pytest.raises(DomainError):
            stability.phase_diagram(GraphKind.T_GRAPH, lambda_grid=[1.0], p_grid=[1.5])
        with pytest.raises(DomainError):
            stability.phase_diagram(GraphKind.T_GRAPH, lambda_grid=[], p_grid=[3.0])

    @pytest.mark.slow
    def test_pool_matches_sequential(self, stability):
        kwargs = dict(lambda_grid=list(np.geomspace(1e-2, 1e2, 6)), p_grid=[3.0, 5.0, 7.0])
        sequential = stability.phase_diagram(GraphKind.TADPOLE, workers=1, **kwargs)
        pooled = stability.phase_diagram(GraphKind.TADPOLE, workers=2, **kwargs)
        assert sequential == pooled
