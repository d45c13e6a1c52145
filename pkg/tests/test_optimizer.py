"""
Tests for fits, sweeps and the excess search.
"""

import pytest
import sys
import os
import numpy as np

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from helfrich_forge.constructions import BumpSpec, flattened_sphere, genus_surface, south_pole_bump
from helfrich_forge.energy import integrate
from helfrich_forge.errors import BudgetExhausted, InvalidSpec, NonPositiveEnergy
from helfrich_forge.optimizer import (
    SWEEP_COLUMNS, BumpScaling, ExcessObjective, area_threshold_bump, bump_area_rate, bump_scaling, catenoid_decay,
    evaluate_spec, fit_decay, fit_power, helfrich_divergence_demo, minimize_excess, nelder_mead, sweep,
    tuned_spec,
)


class TestFits:
    """Test suite for the log fits."""

    def test_exponential_decay(self):
        R = [2.0, 3.0, 4.0, 5.0]
        fit = fit_decay(R, [3.0 * np.exp(-2.0 * r) for r in R])
        assert fit.slope == pytest.approx(-2.0)
        assert fit.intercept == pytest.approx(np.log(3.0))
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_decay_needs_three_points(self):
        with pytest.raises(InvalidSpec):
            fit_decay([1.0, 2.0], [1.0, 0.5])

    def test_decay_rejects_nonpositive(self):
        with pytest.raises(NonPositiveEnergy):
            fit_decay([1.0, 2.0, 3.0], [1.0, 0.0, 0.1])

    def test_power(self):
        x = [0.01, 0.02, 0.04]
        assert fit_power(x, [5.0 * v ** 2 for v in x]).slope == pytest.approx(2.0)

    @pytest.mark.slow
    def test_catenoid_decay_rate(self):
        energies, fit = catenoid_decay([2.0, 3.0, 4.0, 5.0])
        assert all(a > b for a, b in zip(energies, energies[1:]))
        assert -2.4 <= fit.slope <= -1.8


class TestBump:
    """Area threshold and bump scaling."""

    def setup_method(self):
        self.assembly = flattened_sphere(0.1)

    def test_area_rate_sign(self):
        assert bump_area_rate(0.5, 1.0) > 0.0
        assert bump_area_rate(3.0, 1.0) < 0.0

    def test_threshold_restores_area(self):
        t, results = area_threshold_bump(self.assembly, 1, 0.5, tol=1e-7)
        assert t > 0.0
        assert len(results) == len(self.assembly.patches)
        bumped = south_pole_bump(self.assembly, BumpSpec(t, 0.5))
        assert integrate(bumped, tol=1e-6).area >= 4 * np.pi

    def test_quadratic_area_gain(self):
        scaling = bump_scaling(self.assembly, [0.01, 0.02, 0.04], tol=1e-9)
        assert 1.7 <= scaling.area_fit.slope <= 2.3
        assert all(row['delta_area'] > 0 for row in scaling.rows)
        assert list(scaling.to_frame().columns) == ['t', 'delta_area', 'delta_willmore', 'willmore_per_t']

    def test_willmore_constant_from_two_smallest_amplitudes(self):
        rows = [{'t': t, 'delta_area': t ** 2, 'delta_willmore': dW, 'willmore_per_t': dW / t}
                for t, dW in ((0.02, 0.6), (0.04, 1.0), (0.08, 2.4))]
        scaling = BumpScaling(rows, fit_power([0.02, 0.04, 0.08], [4e-4, 1.6e-3, 6.4e-3]))
        assert scaling.willmore_constant == pytest.approx((0.02 * 0.6 + 0.04 * 1.0) / (0.02 ** 2 + 0.04 ** 2))
        assert scaling.willmore_constant == pytest.approx(26.0)
        assert scaling.willmore_bounded(0.25)
        assert not scaling.willmore_bounded(0.1)

    def test_threshold_bump_overshoot_is_small(self):
        t, results = area_threshold_bump(self.assembly, 1, 0.55, tol=1e-7)
        deficit = 4 * np.pi - sum(r.values[0] for r in results)
        area = integrate(south_pole_bump(self.assembly, BumpSpec(t, 0.55)), tol=1e-8).area
        assert 4 * np.pi <= area <= 4 * np.pi + 0.1 * deficit


class TestSweep:
    """Test suite for grid sweeps."""

    def test_infeasible_points_recorded(self):
        table = sweep(2, 1, [0.05, 0.3], [4.0], tol=1e-4)
        frame = table.to_frame()
        assert list(frame.columns) == SWEEP_COLUMNS
        assert frame['feasible'].tolist() == [True, False]
        assert 'delta=0.3' in frame['violations'][1]
        assert table.min_excess() == frame['excess'][0]
        assert table.to_csv().splitlines()[0] == ','.join(SWEEP_COLUMNS)


class QuadraticObjective(ExcessObjective):
    """Smooth bowl in the search coordinates, for exercising the simplex."""

    def value(self, x):
        return float(np.sum((np.asarray(x) - 1.0) ** 2)), None


class TestNelderMead:
    """Test suite for the simplex search."""

    def test_finds_minimum(self):
        objective = QuadraticObjective(2, 1)
        x, score, used = nelder_mead(objective, np.zeros(4), np.ones(4), budget=400)
        assert score < 1e-3
        assert x == pytest.approx(np.ones(4), abs=0.05)
        assert used <= 400
        assert objective.evaluations == used

    def test_history_nonincreasing(self):
        objective = QuadraticObjective(2, 1)
        nelder_mead(objective, np.zeros(4), np.ones(4), budget=60)
        assert all(a >= b for a, b in zip(objective.history, objective.history[1:]))

    def test_stops_at_target(self):
        objective = QuadraticObjective(2, 1)
        _, score, used = nelder_mead(objective, np.zeros(4), np.ones(4), budget=400, target=0.5)
        assert score < 0.5
        assert used < 400

    def test_out_of_box_is_infeasible(self):
        objective = ExcessObjective(2, 1)
        assert objective.spec_at([np.log(0.5), 4.0, 0.0, 0.0]) is None
        assert objective.spec_at([np.log(0.05), 20.0, 0.0, 0.0]) is None
        assert objective.evaluate_many([[np.log(0.5), 4.0, 0.0, 0.0]]) == [np.inf]
        assert objective.evaluations == 1


class TestSearchValidation:
    """Argument checks that need no integration."""

    def test_eps_positive(self):
        with pytest.raises(InvalidSpec):
            minimize_excess(2, 1, 0.0)

    def test_divergence_needs_nonnegative_chi_K(self):
        with pytest.raises(InvalidSpec):
            helfrich_divergence_demo(0.25, -1.0, 0.0, [1, 2, 3])


@pytest.mark.slow
class TestLongRuns:
    """Full searches and the divergence experiment."""

    def test_minimize_reaches_target(self):
        result = minimize_excess(2, 1, eps=1.0, budget=60, tol=1e-5)
        assert result.success
        assert result.excess < 1.0
        assert result.to_dict()['spec']['g'] == 1

    def test_divergence_slope(self):
        table = helfrich_divergence_demo(0.25, 1.0, 0.0, [1, 2, 4], tol=1e-5)
        energies = [row['energy'] for row in table.rows]
        assert energies[0] > energies[1] > energies[2]
        assert table.fit.slope == pytest.approx(-4 * np.pi, rel=0.2)

    def test_tuned_spec_reaches_target_area(self):
        spec = tuned_spec(2, 1, 0.1, tol=1e-6)
        assert spec.t > 0.0
        assert spec.alpha == 0.5
        report = integrate(genus_surface(spec), tol=1e-6)
        assert report.area >= 8 * np.pi * (1 - 1e-4)

    def test_genus_three_below_excess(self):
        result = minimize_excess(2, 3, 0.5, budget=200)
        assert result.success
        assert result.excess < 0.5
        assert result.report.area == pytest.approx(8 * np.pi, abs=1e-4)
        assert result.spec.g == 3
        assert evaluate_spec(result.spec).assembly.contained_in_ball(1.0)

    def test_unreachable_excess_exhausts_budget(self):
        with pytest.raises(BudgetExhausted) as info:
            minimize_excess(2, 1, eps=1e-12, budget=20, tol=1e-5)
        best = info.value.best
        assert best is not None
        assert not best.success
        assert best.excess >= 1e-12
