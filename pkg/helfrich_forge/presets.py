"""
Packaged default parameters for constructions and verification runs.
"""

import json
import logging
import os
from typing import Optional

from helfrich_forge.constructions import GenusSurfaceSpec, default_spec
from helfrich_forge.errors import ConfigError


class PresetLibrary:
    """
    Default (delta, R, theta_eta, alpha) per (m, g) and the tuned delta family.
    """

    def __init__(self, presets_path: Optional[str] = None):
        """
        Args:
            presets_path: JSON file replacing the packaged default_specs.json
        """
        self.logger = logging.getLogger(__name__)
        default_path = os.path.join(os.path.dirname(__file__), 'presets', 'default_specs.json')
        self.path = presets_path if presets_path else default_path
        self.data = self._load(self.path)

    def _load(self, path: str) -> dict:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            self.logger.error(f"Error loading presets from {path}: {str(e)}")
            raise ConfigError(f"cannot load presets from {path}: {e}")
        self.logger.info(f"Loaded {len(data.get('overrides', {}))} preset overrides from {path}")
        return data

    def parameters(self, m: int, g: int) -> dict:
        params = dict(self.data.get('defaults', {}))
        params.update(self.data.get('overrides', {}).get(f"{m},{g}", {}))
        return params

    def spec(self, m: int, g: int, **overrides) -> GenusSurfaceSpec:
        """Default spec for (m, g); keyword overrides win over the preset values."""
        params = self.parameters(m, g)
        params.update({k: v for k, v in overrides.items() if v is not None})
        return default_spec(m, g, **params)

    @property
    def tuned_family(self) -> dict:
        return dict(self.data['tuned_family'])

    def list_value(self, key: str) -> list:
        if key not in self.data:
            raise ConfigError(f"preset file has no '{key}' entry")
        return list(self.data[key])
