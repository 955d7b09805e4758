"""End-to-end acceptance checks, one line of output per criterion."""

import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from plethora import verify

from conftest import ACCEPTANCE_LINES

ROOT = Path(__file__).resolve().parent.parent

# criteria with a runtime budget in seconds
BUDGET = {1: 5, 2: 10, 8: 30, 9: 60, 11: 30}


def report(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.mark.parametrize("num,name,check", verify.CRITERIA, ids=[f"criterion_{n}" for n, _, _ in verify.CRITERIA])
def test_criterion(num, name, check):
    t = time.time()
    ok, detail = check()
    elapsed = time.time() - t
    within = elapsed < BUDGET.get(num, float("inf"))
    report(num, name, ok and within, f"{detail} ({elapsed:.1f}s)")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s, budget {BUDGET[num]}s"


def test_criterion_11_property_suites():
    t = time.time()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
         str(ROOT / "tests" / "test_coeff.py"), str(ROOT / "tests" / "test_linalg.py")],
        capture_output=True, text=True, cwd=ROOT,
    )
    elapsed = time.time() - t
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < BUDGET[11]
    report(11, "coeff and linalg property suites", ok, f"{tail} ({elapsed:.1f}s)")
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert elapsed < BUDGET[11]


def test_criterion_12_verify_command_exits_zero():
    env = dict(os.environ)
    env.pop("PLETHORA_PRECISION", None)
    proc = subprocess.run([sys.executable, "-m", "plethora.cli", "verify-paper"],
                          capture_output=True, text=True, cwd=ROOT, env=env)
    failed = [line for line in proc.stderr.splitlines() if line.startswith("FAIL")]
    ok = proc.returncode == 0 and not failed
    report(12, "verify-paper aggregates 1-10", ok, f"exit {proc.returncode}, failing checks {failed or 'none'}")
    assert ok, proc.stderr[-2000:]
