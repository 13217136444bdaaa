from __future__ import annotations

from pathlib import Path

import pytest

from edbc import Runtime, RuntimeConfig

EXAMPLES = Path(__file__).resolve().parents[1] / "src" / "edbc" / "examples"


def example(name: str) -> Path:
    return EXAMPLES / f"{name}.edl"


def example_source(name: str) -> str:
    return example(name).read_text(encoding="utf-8")


class Sink:
    """Collects text written by a runtime."""

    def __init__(self):
        self.chunks: list[str] = []

    def __call__(self, text: str) -> None:
        self.chunks.append(text)

    @property
    def text(self) -> str:
        return "".join(c if c.endswith("\n") else c + "\n" for c in self.chunks)


@pytest.fixture
def make_runtime():
    """Factory for runtimes with captured output; shut down after the test."""
    made: list[Runtime] = []

    def make(*sources: str, files=(), **config):
        out, err, log = Sink(), Sink(), Sink()
        tracer = config.pop("tracer", None)
        rt = Runtime(RuntimeConfig(**config), out=out, err=err, log=log, tracer=tracer)
        rt.out_sink, rt.err_sink, rt.log_sink = out, err, log
        for f in files:
            rt.load_file(example(f))
        for s in sources:
            rt.load_source(s)
        made.append(rt)
        return rt

    yield make
    for rt in made:
        rt.shutdown()


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.summary_lines():
            terminalreporter.write_line(line)
