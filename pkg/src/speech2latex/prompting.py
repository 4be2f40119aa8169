"""Instruction prompts and few-shot prompt assembly.

Three fixed instruction texts ship as fixture files under ``prompts/`` (two
English, one Greek) and are loaded verbatim — byte identity with the fixture
files is part of the test contract.  ``assemble`` combines an instruction,
retrieved demonstrative examples, and the query into an ``AssembledPrompt``
that serializes deterministically to chat-completion messages.

Examples are serialized in ascending similarity order so the most similar
example sits immediately before the query, and each example renders as an
``Input:``/``Output:`` line pair.  By default the instruction travels as the
system message and all examples plus the query share one user message.
"""

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

PROMPT_IDS = ("p1", "p2", "p3")


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class InstructionPrompt:
    id: str
    text: str


@dataclass(frozen=True)
class AssembledPrompt:
    system_text: str
    example_turns: tuple  # ((nl_text, latex), ...), most similar last
    query_text: str
    instruction_role: str = "system"

    def user_block(self) -> str:
        parts = []
        for nl_text, latex in self.example_turns:
            parts.append(f"Input: {nl_text}\nOutput: {latex}")
        parts.append(f"Input: {self.query_text}\nOutput:")
        return "\n\n".join(parts)

    def to_messages(self) -> list:
        """Chat-completion message list; deterministic for identical inputs."""
        if self.instruction_role == "system":
            return [
                {"role": "system", "content": self.system_text},
                {"role": "user", "content": self.user_block()},
            ]
        return [
            {"role": "user", "content": self.system_text + "\n\n" + self.user_block()}
        ]

    def render(self) -> str:
        """Flat text form of the exact prompt, for --dump-prompt audits."""
        lines = []
        for message in self.to_messages():
            lines.append(f"[{message['role']}]")
            lines.append(message["content"])
        return "\n".join(lines)


@lru_cache(maxsize=None)
def get_prompt(prompt_id: str) -> InstructionPrompt:
    """Load one of the shipped instruction prompts, verbatim."""
    if prompt_id not in PROMPT_IDS:
        raise PromptError(f"unknown prompt id {prompt_id!r}, expected one of {PROMPT_IDS}")
    ref = resources.files("speech2latex").joinpath(f"prompts/{prompt_id}.txt")
    return InstructionPrompt(id=prompt_id, text=ref.read_bytes().decode("utf-8"))


def assemble(
    instruction: InstructionPrompt,
    examples: Sequence,
    query: str,
    query_id: Optional[str] = None,
    instruction_role: str = "system",
) -> AssembledPrompt:
    """Build the prompt from an instruction, ranked examples, and the query.

    ``examples`` are EquationPairs ordered most-similar-first (retrieval rank
    order); they are serialized reversed so the most similar example
    immediately precedes the query.  An empty list produces the no-examples
    baseline prompt.  If ``query_id`` is given, any example carrying that
    pair id is rejected (leakage guard).
    """
    if instruction_role not in ("system", "user"):
        raise PromptError(f"instruction_role must be system or user, got {instruction_role!r}")
    for example in examples:
        if query_id is not None and example.id == query_id:
            raise PromptError(
                f"example {example.id!r} is the query itself; refusing to leak it"
            )
    turns = tuple((ex.nl_text, ex.latex) for ex in reversed(list(examples)))
    return AssembledPrompt(
        system_text=instruction.text,
        example_turns=turns,
        query_text=query,
        instruction_role=instruction_role,
    )
