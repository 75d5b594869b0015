"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--sites 3000] [--repeat 3]

Times tangle construction (ancestor weight updates), MCMC walks, and a whole
MCMC simulation under each available backend, and checks that both produce
the same results.
"""

import argparse
import random
import time

from tanglesim import kernels
from tanglesim.sim import SimConfig, run
from tanglesim.tangle import Site, Tangle, genesis
from tanglesim.tsa import TsaKind, random_walk


def build(n: int, seed: int) -> Tangle:
    rng = random.Random(seed)
    t = Tangle([genesis("g")])
    ids = ["g"]
    for i in range(1, n):
        lo = max(0, len(ids) - 50)
        sid = f"s{i:06d}"
        t.add_site(Site(sid, (ids[rng.randrange(lo, len(ids))], ids[rng.randrange(lo, len(ids))])))
        ids.append(sid)
    return t


def best_of(repeat: int, fn):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sites", type=int, default=3000)
    ap.add_argument("--walks", type=int, default=2000)
    ap.add_argument("--duration", type=float, default=300.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rows = {}
    outputs = {}
    for name in sorted(kernels.BACKENDS):
        previous = kernels.use_backend(name)
        t_build, tangle = best_of(args.repeat, lambda: build(args.sites, 0))
        t_walk, tips = best_of(args.repeat, lambda: [random_walk(tangle, 0.5, random.Random(i)) for i in range(args.walks)])
        cfg = SimConfig(duration=args.duration, seed=1, tsa=TsaKind.mcmc(0.5))
        t_run, trace = best_of(1, lambda: run(cfg))
        kernels.use_backend(previous)
        rows[name] = (t_build, t_walk, t_run)
        outputs[name] = (list(tangle.weights[: len(tangle)]), tips, trace.events)

    print(f"{'backend':<8} {'build ' + str(args.sites):>14} {str(args.walks) + ' walks':>12} {'mcmc run':>10}")
    for name, (b, w, r) in rows.items():
        print(f"{name:<8} {b:>13.3f}s {w:>11.3f}s {r:>9.3f}s")
    if len(rows) == 2:
        py, cy = rows["python"], rows["cython"]
        print("speedup  " + "  ".join(f"{p / c:>10.1f}x" for p, c in zip(py, cy)))
        same = outputs["python"] == outputs["cython"]
        print(f"identical results: {same}")


if __name__ == "__main__":
    main()
