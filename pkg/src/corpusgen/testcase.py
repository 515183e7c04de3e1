from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple


@dataclass(frozen=True)
class TestCase:
    """An ordered sequence of input tokens for a program's input stream.

    Tokens never contain whitespace and are never empty, so the canonical
    newline-joined text round-trips.  Two test cases are duplicates exactly
    when their canonical text is byte-identical.
    """

    __test__ = False  # keep pytest from collecting this class

    tokens: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or tok != tok.strip() or any(c.isspace() for c in tok):
                raise ValueError(f"non-canonical token {tok!r}")

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "TestCase":
        """Canonicalize arbitrary strings by splitting them on whitespace."""
        out = []
        for tok in tokens:
            out.extend(str(tok).split())
        return cls(tuple(out))

    @classmethod
    def from_text(cls, text: str) -> "TestCase":
        return cls(tuple(text.split()))

    @property
    def canonical_text(self) -> str:
        return "\n".join(self.tokens)

    @property
    def size_bytes(self) -> int:
        return len(self.canonical_text.encode("utf-8"))

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return " ".join(self.tokens)
