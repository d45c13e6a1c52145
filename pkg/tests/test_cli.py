"""
Tests for the command line interface.
"""

import pytest
import sys
import os
import json
import numpy as np
from click.testing import CliRunner

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import cli as cli_module
from cli import EXIT_BUDGET, EXIT_NUMERIC, EXIT_SPEC, EXIT_VERIFY, RunConfig, cli
from helfrich_forge.constructions import GenusSurfaceSpec, default_spec
from helfrich_forge.errors import ConfigError
from helfrich_forge.verification import SuiteReport


class TestRunConfig:
    """Settings merge order and validation."""

    def test_flags_win(self, tmp_path):
        path = tmp_path / 'settings.json'
        path.write_text(json.dumps({'tol': 1e-4, 'threads': 2}))
        run = RunConfig.from_sources(str(path), tol=1e-7, threads=None)
        assert run.tol == 1e-7
        assert run.threads == 2

    def test_unknown_key(self, tmp_path):
        path = tmp_path / 'settings.json'
        path.write_text(json.dumps({'tolerance': 1e-4}))
        with pytest.raises(ConfigError):
            RunConfig.from_sources(str(path))

    def test_version(self, tmp_path):
        path = tmp_path / 'settings.json'
        path.write_text(json.dumps({'settings_version': 2}))
        with pytest.raises(ConfigError):
            RunConfig.from_sources(str(path))


class TestGenerate:
    """Test suite for the generate command."""

    def setup_method(self):
        self.runner = CliRunner()

    def test_writes_spec_and_mesh(self, tmp_path):
        result = self.runner.invoke(cli, ['--output-dir', str(tmp_path), 'generate', '--m', '2', '--g', '1',
                                          '--resolution', '32'])
        assert result.exit_code == 0, result.output
        spec = GenusSurfaceSpec.from_json((tmp_path / 'spec.json').read_text())
        assert (spec.m, spec.g) == (2, 1)
        assert (tmp_path / 'mesh.obj').read_text().startswith('v ')

    def test_config_round_trip(self, tmp_path):
        source = tmp_path / 'input.json'
        source.write_text(default_spec(3, 1).to_json())
        out = tmp_path / 'out'
        result = self.runner.invoke(cli, ['--output-dir', str(out), 'generate', '--config', str(source),
                                          '--resolution', '32'])
        assert result.exit_code == 0, result.output
        assert (out / 'spec.json').read_text().strip() == source.read_text().strip()

    def test_invalid_delta(self, tmp_path):
        result = self.runner.invoke(cli, ['--output-dir', str(tmp_path), 'generate', '--m', '2', '--g', '1',
                                          '--delta', '0.3'])
        assert result.exit_code == EXIT_SPEC
        assert 'delta=0.3' in result.output
        assert not (tmp_path / 'spec.json').exists()

    def test_missing_sheets(self, tmp_path):
        result = self.runner.invoke(cli, ['--output-dir', str(tmp_path), 'generate', '--g', '1'])
        assert result.exit_code == EXIT_SPEC


class TestEnergy:
    """Test suite for the energy command."""

    def setup_method(self):
        self.runner = CliRunner()

    def test_double_sphere_json(self, tmp_path):
        out = tmp_path / 'energy.json'
        result = self.runner.invoke(cli, ['--tol', '1e-8', 'energy', '--fixture', 'sphere', '--multiplicity', '2',
                                          '--chi-k=-1', '--output', str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data['area'] == pytest.approx(8 * np.pi, abs=1e-6)
        assert data['willmore'] == pytest.approx(8 * np.pi, abs=1e-6)
        assert data['helfrich'] == pytest.approx(8 * np.pi * (4 * 0.25 - 1.0), abs=1e-6)
        assert data['genus'] == 0
        assert data['mueller_roeger_margin'] == pytest.approx(0.0, abs=1e-5)

    def test_csv(self, tmp_path):
        out = tmp_path / 'energy.csv'
        result = self.runner.invoke(cli, ['energy', '--fixture', 'sphere', '--format', 'csv', '--output', str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_text().splitlines()[0].startswith('area,willmore,helfrich')

    def test_no_convergence_exit_code(self, tmp_path):
        settings = tmp_path / 'settings.json'
        settings.write_text(json.dumps({'tol': 1e-15, 'max_depth': 1}))
        result = self.runner.invoke(cli, ['--settings', str(settings), 'energy', '--fixture', 'sphere'])
        assert result.exit_code == EXIT_NUMERIC

    def test_bad_settings(self, tmp_path):
        settings = tmp_path / 'settings.json'
        settings.write_text(json.dumps({'colour': 'red'}))
        result = self.runner.invoke(cli, ['--settings', str(settings), 'energy', '--fixture', 'sphere'])
        assert result.exit_code == EXIT_SPEC


class TestVerify:
    """Test suite for the verify command."""

    def setup_method(self):
        self.runner = CliRunner()

    def test_profiles_pass(self, tmp_path):
        out = tmp_path / 'verify.json'
        result = self.runner.invoke(cli, ['verify', 'profiles', '--output', str(out)])
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert data['passed'] is True
        assert data['suites'][0]['suite'] == 'profiles'

    def test_failure_exit_code(self, monkeypatch):
        def failing(name, **_):
            report = SuiteReport(name)
            report.add('forced', False)
            return report

        monkeypatch.setattr(cli_module, 'run_suite', failing)
        result = self.runner.invoke(cli, ['verify', 'profiles'])
        assert result.exit_code == EXIT_VERIFY

    def test_unknown_suite(self):
        result = self.runner.invoke(cli, ['verify', 'nonsense'])
        assert result.exit_code == EXIT_SPEC

    @pytest.mark.slow
    def test_same_seed_same_bytes(self, tmp_path):
        outputs = []
        for run in ('first', 'second'):
            out = tmp_path / f"{run}.json"
            result = self.runner.invoke(cli, ['--seed', '7', 'verify', 'profiles', 'li-yau', '--output', str(out)])
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]


class TestSearchCommands:
    """Exit codes of minimize and demo-divergence."""

    def setup_method(self):
        self.runner = CliRunner()

    def test_minimize_rejects_eps(self):
        result = self.runner.invoke(cli, ['minimize', '--m', '2', '--g', '1', '--eps', '0'])
        assert result.exit_code == EXIT_SPEC

    def test_minimize_budget(self):
        result = self.runner.invoke(cli, ['minimize', '--m', '2', '--g', '1', '--eps', '0.1', '--budget', '4'])
        assert result.exit_code == EXIT_BUDGET

    def test_divergence_rejects_negative_chi_K(self):
        result = self.runner.invoke(cli, ['demo-divergence', '--chi-k=-1'])
        assert result.exit_code == EXIT_SPEC
