"""
Django settings for the repeater project.
All deployment-specific values come from environment variables; everything else
has a local default so the management commands run from a fresh checkout.
"""
import os
import dj_database_url
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

# Security
SECRET_KEY = os.environ.get('SECRET_KEY', 'repeater-local-only')
DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []

# Database
DATABASES = {
    'default': dj_database_url.parse(
        os.environ.get('DATABASE_URL', f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
        conn_max_age=600,
    )
}
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Applications
INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'rest_framework',
    'stabilizer',
    'trees',
    'network',
]

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Logging
LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'plain'},
    },
    'loggers': {
        'stabilizer': {'handlers': ['console'], 'level': LOG_LEVEL},
        'trees': {'handlers': ['console'], 'level': LOG_LEVEL},
        'network': {'handlers': ['console'], 'level': LOG_LEVEL},
    },
}

# Store run records and channel summaries in the database
REPEATER_PERSIST_RESULTS = os.environ.get('REPEATER_PERSIST_RESULTS', 'True').lower() == 'true'

# Thread pool size for candidate evaluation in the optimizer (1 = serial)
REPEATER_WORKERS = int(os.environ.get('REPEATER_WORKERS', '1'))


# ========= Model defaults =========

# Hardware constants (times in seconds, lengths in km) and sweep defaults.
# RunConfig files override any of these keys.
REPEATER_DEFAULTS = {
    'constants': {
        'tau_ss': 100e-9,
        'tau_ph': 1e-9,
        'tau_meas': 1e-6,
        'tau_tele': 1e-6,
        'l_att_km': 20.0,
        'eta_d': 0.95,
    },
    'l_tot_km': [round(10 ** (2 + k / 10), 6) for k in range(21)],
    'eps_r': [1e-4, 3e-4, 5e-4, 1e-3, 2e-3],
    'kappa': [1.0, 2.0, 10.0],
    'objective': 'cost',
    'trials': 100000,
    'seed': 2024,
    'max_photons': 300,
    'min_link_km': 1.0,
    'max_segment_links': 150,
    'full_enumeration_limit': 500,
    'include_erasure': True,
    'sweep_eta_e': 0.998,
    'sweep_n_max': 50,
    'validate_n': 8,
    'validate_m_ii': 125,
    'validate_eps_r': [1e-4, 2e-4, 3e-4, 5e-4, 1e-3, 2e-3, 3e-3, 5e-3, 1e-2],
    'mc_trees': ['4,13,4', '5,11,4', '4,14,4', '4,12,5'],
    'mc_mu': 0.15,
    'mc_eps_0': [1e-4, 3.33e-4],
}
