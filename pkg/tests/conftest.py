from __future__ import annotations

import os

# allow thread counts above the core count in determinism tests; must precede numba
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

from hypothesis import HealthCheck, settings  # noqa: E402

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.register_profile("ci", deadline=None, max_examples=50, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))
