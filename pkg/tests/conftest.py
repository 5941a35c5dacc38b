import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_COUNT = 11


def pytest_configure(config):
    config.acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.acceptance_lines
    ran = [i for i in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []) if "test_acceptance" in i.nodeid]
    if not lines and not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in range(1, ACCEPTANCE_COUNT + 1):
        if n in lines:
            ok, name, detail = lines[n]
            terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        elif any(f"test_c{n:02d}_" in i.nodeid for i in ran):
            terminalreporter.write_line(f"criterion {n:2d} FAIL  raised before reaching its check (see traceback)")
