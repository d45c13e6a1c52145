"""
Tests for environment-driven configuration.
"""

import pytest
import sys
import os
import importlib

# Add the parent directory to the path so we can import the application modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import config


class TestConfig:
    """Test suite for the Config classes."""

    def teardown_method(self):
        importlib.reload(config)

    def test_defaults(self, monkeypatch):
        for key in list(os.environ):
            if key.startswith('HELFRICH_FORGE_'):
                monkeypatch.delenv(key)
        importlib.reload(config)
        assert config.Config.TOL == 1e-6
        assert config.Config.THREADS == 1
        assert config.Config.OUTPUT_DIR == 'out'
        assert config.ActiveConfig is config.DevelopmentConfig
        assert config.ActiveConfig.LOG_LEVEL == 'INFO'
        assert config.Config.PRESETS_PATH.endswith(os.path.join('presets', 'default_specs.json'))

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv('HELFRICH_FORGE_TOL', '1e-4')
        monkeypatch.setenv('HELFRICH_FORGE_THREADS', '3')
        monkeypatch.setenv('HELFRICH_FORGE_ENV', 'production')
        monkeypatch.delenv('HELFRICH_FORGE_LOG_LEVEL', raising=False)
        importlib.reload(config)
        assert config.ActiveConfig is config.ProductionConfig
        assert config.ActiveConfig.TOL == 1e-4
        assert config.ActiveConfig.THREADS == 3
        assert config.ActiveConfig.LOG_LEVEL == 'WARNING'
