"""Stress the readers-writers server with and without its cpre gate.

Prints how many requests were served, how many states were sampled and
whether any invariant violation occurred.
"""
import argparse
from importlib import resources

from edbc import Runtime, RuntimeConfig
from edbc.values import Atom


def run(module: str, clients: int, ops: int, seed: int, policy: str) -> None:
    errors: list[str] = []
    rt = Runtime(RuntimeConfig(seed=seed, policy=policy), out=lambda _: None, err=errors.append)
    rt.load_source(resources.files("edbc.examples").joinpath(f"{module}.edl").read_text())
    states = []
    rt.server_observers.append(lambda pid, s: states.append(s))
    result = rt.eval_call(module, "main", [clients, ops], timeout=300)
    rt.quiesce(1.0)
    rt.shutdown()
    unsafe = [s for s in states if s[2] is True and s[1] != 0]
    served = sum(len(s.served) for s in rt.servers.values())
    print(f"{module}: result={result.name if isinstance(result, Atom) else result} "
          f"served={served} states={len(states)} unsafe_states={len(unsafe)} "
          f"terminations={len(rt.terminations)}")
    if rt.terminations:
        print(errors[0])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--clients", type=int, default=20)
    p.add_argument("--ops", type=int, default=50, help="sessions per client")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--policy", choices=["fair", "resend"], default="fair")
    args = p.parse_args()
    for module in ("readers_writers", "readers_writers_nocpre"):
        run(module, args.clients, args.ops, args.seed, args.policy)


if __name__ == "__main__":
    main()
