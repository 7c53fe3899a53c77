"""
Django settings for spectral_lab project.

Generated by 'django-admin startproject' using Django 5.2.1, trimmed to what a
command-line laboratory needs: no middleware, no templates, no URL routing.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'SPECTRAL_LAB_SECRET_KEY',
    'django-insecure-spectral-lab-local-only',
)

DEBUG = os.environ.get('SPECTRAL_LAB_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'geometry',
    'spectra',
    'certificates',
]


# Database
# 預設使用 SQLite；設定 POSTGRES_DB 後改用 docker-compose 內的 PostgreSQL

if os.environ.get('POSTGRES_DB'):
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': os.environ['POSTGRES_DB'],
            'USER': os.environ.get('POSTGRES_USER', 'spectral'),
            'PASSWORD': os.environ.get('POSTGRES_PASSWORD', ''),
            'HOST': os.environ.get('POSTGRES_HOST', 'localhost'),
            'PORT': os.environ.get('POSTGRES_PORT', '5432'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'spectral_lab.sqlite3',
        }
    }


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# REST Framework 只拿來做序列化與 JSON 輸出，不提供 API 服務
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
}


# 實驗室參數
SPECTRAL_LAB = {
    'DEFAULT_N': int(os.environ.get('SPECTRAL_LAB_N', '64')),
    # 'stebz' = LAPACK Sturm 二分法, 'bisect' = 專案內建 Sturm 二分法
    'EIGEN_DRIVER': os.environ.get('SPECTRAL_LAB_EIGEN_DRIVER', 'stebz'),
    'EIGEN_TOL': 1e-13,
    'THEOREM_TOL': 1e-6,
    # Laplace 型算子要求 λ·h² ≤ 0.25，Dirac 要求 |λ|·h ≤ 0.5
    'RESOLUTION_LIMIT': {'laplace': 0.25, 'dirac': 0.5},
    'JOBS': int(os.environ.get('SPECTRAL_LAB_JOBS', '1')),
    'OUTPUT_DIR': os.environ.get('SPECTRAL_LAB_OUTPUT_DIR', 'artifacts'),
    'SCHEMA_VERSION': '1.0',
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'lab': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'lab',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': os.environ.get('SPECTRAL_LAB_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        }
        for app in ('geometry', 'spectra', 'certificates')
    },
}
