"""
獨立工作（角向模態、sweep 格子）的 process pool。
jobs = 1 時直接在目前的 process 依序執行；輸出順序永遠與輸入相同。
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor

import django
from django.conf import settings

logger = logging.getLogger(__name__)


def _init_worker(settings_module):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', settings_module)
    django.setup()


def resolve_jobs(jobs=None):
    if jobs is None:
        jobs = settings.SPECTRAL_LAB['JOBS']
    return max(1, int(jobs))


def parallel_map(func, items, jobs=None):
    """func 必須是模組層級函式（可 pickle）。"""
    items = list(items)
    jobs = min(resolve_jobs(jobs), len(items))
    if jobs <= 1:
        return [func(item) for item in items]

    logger.debug("parallel_map %s: %d items on %d workers", func.__name__, len(items), jobs)
    settings_module = os.environ.get('DJANGO_SETTINGS_MODULE', 'spectral_lab.settings')
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_init_worker,
        initargs=(settings_module,),
    ) as pool:
        return list(pool.map(func, items))
