"""Compare fib run times with contracts on, contracts off and no contracts at all."""
import argparse
import statistics
import time
from importlib import resources

from edbc import Runtime, RuntimeConfig

PLAIN = "-module(fib).\nfib(0) -> 0;\nfib(1) -> 1;\nfib(N) -> fib(N - 1) + fib(N - 2).\n"


def bench(source: str, enabled: bool, n: int, reps: int) -> float:
    rt = Runtime(RuntimeConfig(contracts_enabled=enabled))
    rt.load_source(source)
    times = []
    for _ in range(reps):
        t = time.perf_counter()
        rt.eval_call("fib", "fib", [n])
        times.append(time.perf_counter() - t)
    rt.shutdown()
    return statistics.median(times)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("-n", type=int, default=18)
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args()
    contracted = resources.files("edbc.examples").joinpath("fib.edl").read_text()
    base = bench(PLAIN, True, args.n, args.reps)
    for label, src, enabled in (("hand-written", PLAIN, True), ("contracts off", contracted, False),
                                ("contracts on", contracted, True)):
        t = bench(src, enabled, args.n, args.reps)
        print(f"{label:>14}: {t * 1000:8.1f} ms  ({t / base:.2f}x)")


if __name__ == "__main__":
    main()
