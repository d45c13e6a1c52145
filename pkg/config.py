"""
Configuration settings for the helfrich-forge command line.
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Base configuration class."""
    # Numerical settings
    THREADS = int(os.environ.get('HELFRICH_FORGE_THREADS', '1'))
    TOL = float(os.environ.get('HELFRICH_FORGE_TOL', '1e-6'))
    MAX_DEPTH = int(os.environ.get('HELFRICH_FORGE_MAX_DEPTH', '12'))
    RESOLUTION = int(os.environ.get('HELFRICH_FORGE_RESOLUTION', '64'))

    # Output settings
    OUTPUT_DIR = os.environ.get('HELFRICH_FORGE_OUTPUT_DIR', 'out')
    LOG_LEVEL = os.environ.get('HELFRICH_FORGE_LOG_LEVEL', 'WARNING').upper()

    # Preset parameters
    PRESETS_PATH = os.environ.get(
        'HELFRICH_FORGE_PRESETS_PATH',
        os.path.join(os.path.dirname(__file__), 'helfrich_forge', 'presets', 'default_specs.json')
    )


class DevelopmentConfig(Config):
    """Development configuration."""
    LOG_LEVEL = os.environ.get('HELFRICH_FORGE_LOG_LEVEL', 'INFO').upper()


class ProductionConfig(Config):
    """Production configuration."""
    LOG_LEVEL = os.environ.get('HELFRICH_FORGE_LOG_LEVEL', 'WARNING').upper()


# Set the active configuration based on environment
if os.environ.get('HELFRICH_FORGE_ENV') == 'production':
    ActiveConfig = ProductionConfig
else:
    ActiveConfig = DevelopmentConfig
