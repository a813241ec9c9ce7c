"""Regenerate the CLI reference outputs in tests/golden/.

Run from anywhere; the commands execute with the repository root as the
working directory so that the recorded paths match the test run. Pass case
names to refresh only those.
"""

import os
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from cli_cases import CASES  # noqa: E402

from rfsquid import cli  # noqa: E402


def main(names):
    os.chdir(ROOT)
    for name in names or sorted(CASES):
        out = Path("tests") / "golden" / name
        shutil.rmtree(out, ignore_errors=True)
        code = cli.main(CASES[name] + ["--out", str(out)])
        if code != 0:
            sys.exit(f"{name}: exit code {code}")


if __name__ == "__main__":
    main(sys.argv[1:])
