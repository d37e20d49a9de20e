"""Shared fixtures: canonical parameter points and the acceptance summary.

The acceptance tests (tests/test_acceptance.py) each cover one numbered
criterion; the terminal-summary hook below prints one PASS/FAIL line per
criterion at the end of the run so the verdicts are readable without
scrolling through the full log.
"""

import math
import re

import pytest

from phonpair.params import SystemParams

TWO_PI = 2.0 * math.pi


def desk_point(n_trunc: int = 60, eps_over_g: float = 4.0) -> SystemParams:
    """The cat-stabilization operating point used throughout the tests.

    g_z/2pi = 6 MHz, g_x = 0.1 g_z, omega_m/2pi = 100 MHz, kappa/2pi =
    100 kHz, gamma/2pi = 15 Hz, two-phonon resonance omega_q = omega_d =
    2 omega_m. The pair coupling comes out at g/2pi = 36 kHz and the drive
    is set through eps = eps_over_g * g.
    """
    g_hz = 0.6e6 * 6e6 / 100e6
    return SystemParams.from_hz(
        omega_m=100e6,
        omega_q=200e6,
        omega_d=200e6,
        g_x=0.6e6,
        g_z=6e6,
        Omega=2.0 * eps_over_g * g_hz,
        kappa=100e3,
        gamma=15.0,
        n_trunc=n_trunc,
    )


def ci_point(n_trunc: int = 20, eps_over_g: float = 2.0) -> SystemParams:
    """Ratio-preserving scaled-down point (omega_m/2pi = 10 MHz)."""
    g_hz = 60e3 * 600e3 / 10e6
    return SystemParams.from_hz(
        omega_m=10e6,
        omega_q=20e6,
        omega_d=20e6,
        g_x=60e3,
        g_z=600e3,
        Omega=2.0 * eps_over_g * g_hz,
        kappa=10e3,
        gamma=1.5,
        n_trunc=n_trunc,
    )


@pytest.fixture(scope="session")
def fig_point() -> SystemParams:
    return desk_point()


@pytest.fixture(scope="session")
def small_point() -> SystemParams:
    return ci_point()


_CRITERION_RE = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts: dict[int, str] = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            m = _CRITERION_RE.search(nodeid)
            if not m:
                continue
            num = int(m.group(1))
            # a FAIL in any phase (setup/call/teardown) wins over PASS
            if verdicts.get(num) != "FAIL":
                verdicts[num] = label
    if not verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(verdicts):
        terminalreporter.write_line(f"criterion {num}: {verdicts[num]}")
