"""
Configuration settings for the supermatch toolkit
"""
import os


class Config:
    """Base configuration"""
    # Lattice enumeration
    ENUMERATION_LIMIT = int(os.environ.get('ENUMERATION_LIMIT', 10**6))

    # Internal DPLL solver
    SOLVER_CONFLICT_LIMIT = int(os.environ.get('SOLVER_CONFLICT_LIMIT', 5_000_000))
    EXTERNAL_SOLVER_TIMEOUT = 60  # seconds

    # Random SAT-SM generation
    GENERATION_ATTEMPTS = 10_000

    # Equivalence harness
    EQUIVALENCE_WORKERS = os.cpu_count() or 1
    EQUIVALENCE_MAX_LISTS = 8

    # Logging
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING')


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')


class ProductionConfig(Config):
    """Production configuration"""


class TestingConfig(Config):
    """Testing configuration"""
    ENUMERATION_LIMIT = 10_000
    SOLVER_CONFLICT_LIMIT = 100_000
    EQUIVALENCE_WORKERS = 1


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': ProductionConfig
}


def get_config(name: str = None):
    """Return the configuration class selected by name or SUPERMATCH_ENV"""
    name = name or os.environ.get('SUPERMATCH_ENV', 'default')
    return config.get(name, config['default'])
