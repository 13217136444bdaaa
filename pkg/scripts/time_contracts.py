"""Run the execution-time examples and print the reports they produce."""
import argparse
from importlib import resources

from edbc import Runtime, RuntimeConfig, Violation


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--slack", type=float, default=20.0, help="ms")
    p.add_argument("--tasks", type=int, default=10)
    args = p.parse_args()

    rt = Runtime(RuntimeConfig(slack_ms=args.slack))
    rt.load_source(resources.files("edbc.examples").joinpath("time_contracts.edl").read_text())
    tasks = list(range(1, args.tasks + 1))
    calls = [("f_time", [tasks]), ("f_time2", [tasks]), ("bounded", [20, 100]),
             ("bounded", [400, 100])]
    for name, call_args in calls:
        try:
            rt.eval_call("time_contracts", name, call_args, timeout=30)
            print(f"{name}: ok")
        except Violation as v:
            print(f"{name}: {v.message}")
    rt.shutdown()


if __name__ == "__main__":
    main()
