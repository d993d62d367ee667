import numpy as np
import pytest
from hypothesis import settings

from tikhoscale import KernelSpec, MultiscaleSolver, SourceSpec, kernel_eval, make_grid, source_eval

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def clean_g(spec, s, Nq=3000):
    """Forward quadrature of the smooth source at arbitrary points ``s``."""
    t = make_grid(Nq).midpoints
    f = source_eval(SourceSpec.smooth_sine(), t)
    return (kernel_eval(spec, np.asarray(s)[:, None], t[None, :]) * f[None, :]).sum(axis=1) / Nq


@pytest.fixture(scope="session")
def fine_solver_025():
    """Shared N = 3000, d = 0.25 solver; its SVD is the expensive part."""
    return MultiscaleSolver(KernelSpec.gravity(0.25), 3000)


ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    """Record and print one acceptance line, then assert it."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
