import time
from pathlib import Path

import pytest

from edgcomplete.cli import EXIT_OK, main

# criterion id -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}

SPHERE_RATES = "0.01,0.02,0.03,0.05"

RUNS = {
    "table_exact": ["table", "--generator", "sphere:1002", "--rates", SPHERE_RATES,
                    "--trials", "10", "--seed", "0"],
    "table_noisy": ["table", "--generator", "sphere:1002", "--rates", SPHERE_RATES,
                    "--trials", "10", "--seed", "0", "--noisy"],
    "phase": ["phase-diagram", "--generator", "gaussian:300", "--rates", "0.02,0.05,0.1,0.2",
              "--ranks", "2,3,5,10", "--trials", "10", "--seed", "0"],
    "spot": ["phase-diagram", "--generator", "gaussian:50", "--rates", "1.0",
             "--ranks", "2,3,5,10", "--trials", "10", "--seed", "0"],
}


def record(key: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[key] = (passed, detail)
    print(f"{'PASS' if passed else 'FAIL'} criterion {key}: {detail}")


def _run_all(root: Path, threads: int) -> dict:
    out = {"timings": {}}
    for name, argv in RUNS.items():
        target = root / f"threads{threads}" / name
        start = time.perf_counter()
        rc = main([*argv, "--threads", str(threads), "--output-dir", str(target)])
        out["timings"][name] = time.perf_counter() - start
        assert rc == EXIT_OK, f"{name} exited with {rc}"
        out[name] = target
    return out


@pytest.fixture(scope="session")
def experiment_runs(tmp_path_factory):
    """Full-size experiment outputs, computed once with --threads 1 and once with 2."""
    root = tmp_path_factory.mktemp("acceptance")
    return {1: _run_all(root, 1), 2: _run_all(root, 2)}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {key}: {detail}")
