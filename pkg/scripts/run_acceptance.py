"""Run the acceptance suite and print one pass/fail line per criterion.

Usage: python3 scripts/run_acceptance.py [-k EXPR]

Thin wrapper over pytest; the suite takes about 10 minutes on one core.
"""

import sys
from pathlib import Path

import pytest


def main():
    root = Path(__file__).resolve().parent.parent
    args = [str(root / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider", *sys.argv[1:]]
    return pytest.main(args)


if __name__ == "__main__":
    raise SystemExit(main())
