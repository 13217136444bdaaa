"""Markdown documentation of the contracts declared in a module."""
from __future__ import annotations

from dataclasses import dataclass, field

from .printer import contract_to_str
from .syntax import (Decreases, ExpectedTime, FunDef, ModuleAst, Post, Pre, Pure, Spec,
                     Timeout)

# heading, contract classes; the order is the order of the sections
GROUPS = (
    ("Spec", (Spec,)),
    ("Preconditions", (Pre,)),
    ("Postconditions", (Post,)),
    ("Decreasing arguments", (Decreases,)),
    ("Purity", (Pure,)),
    ("Execution time", (ExpectedTime, Timeout)),
)


@dataclass
class DocEntry:
    name: str
    arity: int
    blocks: list[tuple[str, list[str]]] = field(default_factory=list)

    @property
    def contracted(self) -> bool:
        return bool(self.blocks)

    @property
    def block_count(self) -> int:
        return sum(len(texts) for _, texts in self.blocks)


def doc_entry(f: FunDef) -> DocEntry:
    entry = DocEntry(f.name, f.arity)
    for heading, kinds in GROUPS:
        texts = [contract_to_str(c, f.name) for c in f.contracts if isinstance(c, kinds)]
        if texts:
            entry.blocks.append((heading, texts))
    return entry


def doc_entries(m: ModuleAst) -> list[DocEntry]:
    return [doc_entry(f) for f in m.fundefs]


def _fence(text: str) -> list[str]:
    return ["```erlang", text, "```", ""]


def generate_docs(m: ModuleAst) -> str:
    """Render one section per function; uncontracted functions get a bare header."""
    lines = [f"# Module `{m.name}`", ""]
    if m.module_invariant is not None:
        lines += ["## Server invariant", ""]
        lines += _fence(contract_to_str(m.module_invariant))
    for entry in doc_entries(m):
        lines += [f"## {entry.name}/{entry.arity}", ""]
        for heading, texts in entry.blocks:
            lines += [f"### {heading}", ""]
            for text in texts:
                lines += _fence(text)
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"


def count_blocks(markdown: str) -> int:
    return markdown.count("```erlang")


__all__ = ["DocEntry", "count_blocks", "doc_entries", "doc_entry", "generate_docs"]
