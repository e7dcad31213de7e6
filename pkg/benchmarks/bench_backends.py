"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import time
through QLA_BACKEND).  JIT compilation is excluded by a warm-up call.

    python benchmarks/bench_backends.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = {
    "kdv N=4096 x 2000 steps": ("kdv", 4096, 2000),
    "maxwell 128x128 x 50 steps": ("maxwell", 128, 50),
    "maxwell lens 128x128 x 50 steps": ("maxwell-lens", 128, 50),
}


def _child(case: str, repeat: int) -> None:
    import numpy as np

    from qla import _accel
    from qla.kdv import KdvScheme
    from qla.maxwell import IndexProfile, MaxwellScheme, RefractiveIndexField

    kind, n, steps = CASES[case]
    rng = np.random.default_rng(0)
    if kind == "kdv":
        scheme = KdvScheme.for_coefficient("UnitaryV1", 0.05, n, 4.0)
        q = 0.1 * rng.standard_normal((2, n))
    else:
        if kind == "maxwell":
            index = RefractiveIndexField.uniform((n, n), 1.0)
        else:
            lens = IndexProfile("gaussian-lens", {"n0": 1.0, "dn": 0.5, "x0": 3.2, "y0": 3.2, "sigma": 1.0})
            index = RefractiveIndexField.from_profiles((n, n), 0.05, lens)
        scheme = MaxwellScheme(0.05, index)
        q = rng.standard_normal((6, n * n))
    scheme.advance(q, 1, workers=1)  # compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        scheme.advance(q, steps, workers=1)
        best = min(best, time.perf_counter() - t0)
    print(json.dumps({"backend": _accel.BACKEND, "seconds": best, "steps": steps}))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results here as well")
    ap.add_argument("--child", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        _child(args.child, args.repeat)
        return

    results = []
    print(f"{'case':<34}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for case in CASES:
        row = {"case": case}
        for backend in ("numba", "numpy"):
            env = dict(os.environ, QLA_BACKEND=backend)
            out = subprocess.run([sys.executable, __file__, "--child", case, "--repeat", str(args.repeat)],
                                 env=env, capture_output=True, text=True, check=True)
            row[backend] = json.loads(out.stdout.strip().splitlines()[-1])["seconds"]
        row["speedup"] = row["numpy"] / row["numba"]
        results.append(row)
        print(f"{case:<34}{row['numba']:>10.3f}{row['numpy']:>10.3f}{row['speedup']:>8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
