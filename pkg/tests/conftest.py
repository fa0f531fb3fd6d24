from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kneserkit.group import GroupSet

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE[marker.args[0]] = (rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_set(g, rng, p=None):
    p = rng.uniform(0.05, 0.7) if p is None else p
    mask = rng.random(g.total_size) < p
    if not mask.any():
        mask[rng.integers(g.total_size)] = True
    return GroupSet(g, mask)
