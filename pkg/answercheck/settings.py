"""
Settings for answercheck.

Configured for:
- Environment overrides (ANSWERCHECK_* variables, optional .env file)
- Pipeline defaults shared by the library, the CLI and the tests
- Logging to stderr so stdout stays machine-readable
"""
import logging.config
from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env()

# Load .env config if available
env_path = BASE_DIR / '.env'
if env_path.exists():
    environ.Env.read_env(str(env_path), overwrite=False)


# =============================================================================
# Comparison pipeline defaults
# =============================================================================

_wall_clock = env.int('ANSWERCHECK_WALL_CLOCK_LIMIT_MS', default=0)

CHECK_CONFIG = {
    # Auto-generated disjoint segments
    'segment_count': env.int('ANSWERCHECK_SEGMENT_COUNT', default=3),
    'segment_length': env.float('ANSWERCHECK_SEGMENT_LENGTH', default=10.0),
    'placement_range': (
        env.float('ANSWERCHECK_RANGE_A', default=1.0),
        env.float('ANSWERCHECK_RANGE_B', default=100.0),
    ),

    # Check points per segment (m) and assumed zero count per segment (k)
    'points': env.int('ANSWERCHECK_POINTS', default=100),
    'assumed_k': env.int('ANSWERCHECK_ASSUMED_K', default=10**6),

    # Zero test
    'tol_abs': env.float('ANSWERCHECK_TOL_ABS', default=1e-12),
    'tol_rel': env.float('ANSWERCHECK_TOL_REL', default=1e-9),

    # Evaluation budget; wall clock disabled unless set (keeps runs deterministic)
    'max_node_visits': env.int('ANSWERCHECK_MAX_NODE_VISITS', default=10_000),
    'wall_clock_limit_ms': _wall_clock or None,

    # Undefined points may be redrawn up to resample_factor * m times
    'resample_factor': env.int('ANSWERCHECK_RESAMPLE_FACTOR', default=10),

    'grid_mode': env.str('ANSWERCHECK_GRID_MODE', default='relative'),
    'variable': env.str('ANSWERCHECK_VARIABLE', default='x'),
    'seed': env.int('ANSWERCHECK_SEED', default=0),

    # What an "I don't know" outcome grades as: accept | reject
    'inconclusive_policy': env.str('ANSWERCHECK_INCONCLUSIVE_POLICY', default='accept'),
}

# Exact rational path of the probability module is used up to this grid size
EXACT_PROBABILITY_MAX_M = env.int('ANSWERCHECK_EXACT_MAX_M', default=10**6)

# Exhaustive enumeration oracle limit
BRUTE_FORCE_MAX_M = 12

# Trials per vectorized batch in the Monte Carlo harness
SIMULATION_CHUNK = env.int('ANSWERCHECK_SIMULATION_CHUNK', default=100_000)

# Parenthesis / unary-minus / power nesting accepted by the parser
MAX_PARSE_NESTING = 100

REPORT_SCHEMA_VERSION = '1.0'


# =============================================================================
# Logging Configuration
# =============================================================================

LOG_LEVEL = env.str('ANSWERCHECK_LOG_LEVEL', default='WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'answercheck': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


def configure_logging(level: str | None = None) -> None:
    """Apply LOGGING, optionally overriding the package log level."""
    config = {**LOGGING, 'loggers': {k: dict(v) for k, v in LOGGING['loggers'].items()}}
    if level:
        config['loggers']['answercheck']['level'] = level.upper()
    logging.config.dictConfig(config)
