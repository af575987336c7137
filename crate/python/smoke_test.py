#!/usr/bin/env python3
"""Smoke test for the coint_py extension module.

Locates the compiled cdylib under target/, exposes it as an importable
module, and exercises every binding. Build first with:

    cargo build -p coint-py            # or --release

Run:

    python3 python/smoke_test.py
"""

import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_extension() -> pathlib.Path:
    candidates = []
    for profile in ("release", "debug"):
        d = ROOT / "target" / profile
        candidates += list(d.glob("libcoint_py.so"))
        candidates += list(d.glob("coint_py.dll"))
        candidates += list(d.glob("libcoint_py.dylib"))
    if not candidates:
        sys.exit("coint_py cdylib not found; run `cargo build -p coint-py` first")
    return max(candidates, key=lambda p: p.stat().st_mtime)


def import_module():
    lib = locate_extension()
    tmp = tempfile.mkdtemp(prefix="coint-py-")
    shutil.copy(lib, pathlib.Path(tmp) / "coint_py.so")
    sys.path.insert(0, tmp)
    import coint_py

    return coint_py


def main() -> None:
    m = import_module()

    # simulation is deterministic and seed-sensitive
    x, y = m.simulate(200, 0.4, alpha=0.5, beta=2.0, sigma2=1.0, seed=11)
    x2, y2 = m.simulate(200, 0.4, alpha=0.5, beta=2.0, sigma2=1.0, seed=11)
    x3, _ = m.simulate(200, 0.4, alpha=0.5, beta=2.0, sigma2=1.0, seed=12)
    assert len(x) == len(y) == 200
    assert x == x2 and y == y2
    assert x != x3

    # OLS recovers the generating regression roughly
    fit = m.ols_fit(x, y)
    assert abs(fit.beta - 2.0) < 0.3, fit

    # cointegrated pair is detected, with sensible diagnostics
    res = m.bayes_test(x, y)
    assert res.cointegrated, res
    assert res.log_bayes_factor < res.threshold_log_c == 2.0
    assert -1.0 < res.phi_mean < 1.0
    assert res.phi_m2 < 1.0

    # a spurious pair (independent random walks) is rejected
    rx, ry = m.simulate(200, 1.0, seed=21)
    spurious = m.bayes_test(rx, ry)
    assert not spurious.cointegrated, spurious

    # classical baseline agrees on the easy cointegrated case
    cls = m.classical_test(x, y, calib_n=2000, seed=3)
    assert cls.reject_unit_root, cls
    assert cls.tau < cls.critical_value < 0.0

    # segmentation: forced random walk labels every step RW
    seg = m.segment(rx, ry, p_init_rw=1.0, p_rw_to_rw=1.0, p_c_to_c=0.5)
    assert seg.regimes == [1] * 199
    assert seg.phi == [1.0] * 199
    assert all(p == 1.0 for p in seg.smoothed_rw_prob)

    # segmentation on a cointegrated pair mostly labels steps C
    seg2 = m.segment(x, y, p_init_rw=0.5, p_rw_to_rw=0.95, p_c_to_c=0.95)
    assert sum(seg2.regimes) < 50, sum(seg2.regimes)
    assert len(seg2.filtered_rw_prob) == 199
    assert all(0.0 <= p <= 1.0 for p in seg2.smoothed_rw_prob)

    # errors surface as ValueError
    for bad in (
        lambda: m.bayes_test([1.0, 2.0], [1.0, 2.0]),
        lambda: m.ols_fit([1.0] * 10, list(map(float, range(10)))),
        lambda: m.segment(x, y, p_init_rw=1.5, p_rw_to_rw=0.5, p_c_to_c=0.5),
        lambda: m.simulate(10, 1.5),
    ):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
