"""Serve ten reverse-spawned results in order under both request policies."""
from importlib import resources

from edbc import Runtime
from edbc.values import Atom

SOURCE = resources.files("edbc.examples").joinpath("selective_receive.edl").read_text()

for policy in ("fair", "resend"):
    lines: list[str] = []
    rt = Runtime(out=lines.append)
    rt.load_source(SOURCE)
    rt.eval_call("selective_receive", "main", [Atom(policy)], timeout=30)
    rt.shutdown()
    order = [int(line.split(":")[1]) for line in "".join(lines).splitlines()]
    print(f"{policy:>6}: {order}")
