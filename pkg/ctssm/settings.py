"""
Django settings for the ctssm project.

The project has no web surface and no database: Django provides the
management-command CLI, the settings layer, logging configuration and the
test runner. Numerical defaults for the commands live in STATESPACE.
"""

import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'ctssm-batch-only-no-http-surface')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    'rest_framework',

    'statespace.apps.StatespaceConfig',
]

MIDDLEWARE = []

# Данные приходят только из CSV, база не нужна
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TEST_RUNNER = 'statespace.test_runner.StateSpaceTestRunner'


# Internationalization

LANGUAGE_CODE = 'ru'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "UNAUTHENTICATED_USER": None,
    "COERCE_DECIMAL_TO_STRING": False,
}


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "statespace": {
            "handlers": ["console"],
            "level": os.environ.get("DJANGO_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}


# Defaults for the statespace commands; every value can be overridden per run
# through --config files or flags.

STATESPACE = {
    "DEFAULT_M": 100,
    "SIM_RANGE": (-2.5, 2.5),
    "SWEEP_M_VALUES": (20, 30, 50, 100, 150),
    "CONSISTENCY_T_VALUES": (2000, 5000),
    "FULL_T_VALUES": (2000, 5000, 10000),
    "CONSISTENCY_REPLICATES": 50,
    "SIM_T": 2000,
    "SIM_ALPHA": 200.0,
    "GAP_MEAN_HOURS": 30.0,
    "PANEL_INDIVIDUALS": 1000,
    "PANEL_DROPOUT": 0.15,
    "EULER_STEP": 0.01,
    "EULER_HORIZON": 100.0,
    "THREADS": int(os.environ.get("STATESPACE_THREADS", "1")),
    "OPTIMIZER": {
        "method": "nelder-mead",
        "refine": True,
        "maxiter": 4000,
        "xatol": 1e-6,
        "fatol": 1e-7,
        "jitter": 0.1,
        "panel_starts": 3,
    },
    "TIME_UNITS": {
        "setting": "days",
        "panel": "years",
    },
}
