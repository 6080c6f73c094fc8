import runpy
from pathlib import Path

import pytest

from latticetherm._kernels import numba_impl

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


@pytest.mark.skipif(numba_impl is None, reason="numba not installed")
def test_benchmark_runs_and_backends_agree(capsys):
    main = runpy.run_path(str(BENCH))["main"]
    main(["--sites", "4", "--repeat", "1"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    for line in lines[1:]:
        assert float(line.split()[-1]) < 1e-12
