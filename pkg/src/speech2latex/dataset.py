"""Equation corpus loading, validation, and deterministic splitting.

The corpus is JSON Lines: one object per line with keys ``id``, ``nl_text``,
``latex`` and optional ``split``.  Splitting shuffles with a self-contained
PRNG (splitmix64 seeding an xorshift64* stream driving a Fisher-Yates pass)
so the same seed yields the same assignment in any implementation of the
same recipe; see ``seeded_permutation`` for the exact constants.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

SPLITS = ("train", "validation", "test", "unassigned")

_MASK64 = 0xFFFFFFFFFFFFFFFF


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class EquationPair:
    id: str
    nl_text: str
    latex: str
    split: str = "unassigned"

    def __post_init__(self):
        if not self.id or not str(self.id).strip():
            raise DatasetError("pair id must be non-empty")
        if not self.nl_text.strip():
            raise DatasetError(f"pair {self.id!r}: nl_text is empty")
        if not self.latex.strip():
            raise DatasetError(f"pair {self.id!r}: latex is empty")
        if self.split not in SPLITS:
            raise DatasetError(
                f"pair {self.id!r}: split must be one of {SPLITS}, got {self.split!r}"
            )


class Dataset:
    """Immutable ordered collection of EquationPairs with unique ids."""

    def __init__(self, pairs: Iterable[EquationPair]):
        self.pairs = tuple(pairs)
        seen = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise DatasetError(f"duplicate pair id {pair.id!r}")
            seen.add(pair.id)
        self._by_id = {pair.id: pair for pair in self.pairs}

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[EquationPair]:
        return iter(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self.pairs == other.pairs

    @property
    def counts(self) -> Counter:
        return Counter(pair.split for pair in self.pairs)

    def get(self, pair_id: str) -> EquationPair:
        try:
            return self._by_id[pair_id]
        except KeyError:
            raise DatasetError(f"unknown pair id {pair_id!r}") from None

    def by_split(self, split: str) -> tuple:
        if split not in SPLITS:
            raise DatasetError(f"unknown split {split!r}")
        return tuple(pair for pair in self.pairs if pair.split == split)


def load_dataset(path) -> "Dataset":
    """Parse a JSONL corpus file, preserving line order.

    Malformed lines, duplicate ids, and empty fields abort with an error
    naming the offending line or pair.
    """
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}: malformed JSON on line {lineno}: {exc}") from None
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}: line {lineno} is not a JSON object")
            missing = {"id", "nl_text", "latex"} - obj.keys()
            if missing:
                raise DatasetError(
                    f"{path}: line {lineno} missing keys {sorted(missing)}"
                )
            try:
                pair = EquationPair(
                    id=str(obj["id"]),
                    nl_text=obj["nl_text"],
                    latex=obj["latex"],
                    split=obj.get("split", "unassigned"),
                )
            except DatasetError as exc:
                raise DatasetError(f"{path}: line {lineno}: {exc}") from None
            if pair.id in seen:
                raise DatasetError(f"{path}: duplicate id {pair.id!r} on line {lineno}")
            seen.add(pair.id)
            pairs.append(pair)
    return Dataset(pairs)


def save_dataset(dataset: Dataset, path) -> None:
    """Write JSONL in pair order; load_dataset round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in dataset:
            fh.write(
                json.dumps(
                    {
                        "id": pair.id,
                        "nl_text": pair.nl_text,
                        "latex": pair.latex,
                        "split": pair.split,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class _XorShift64Star:
    """xorshift64* stream; state seeded through splitmix64, never zero."""

    def __init__(self, seed: int):
        self.state = _splitmix64(seed & _MASK64) or 0x9E3779B97F4A7C15

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64


def seeded_permutation(n: int, seed: int) -> list:
    """Deterministic permutation of range(n).

    Recipe (fixed for cross-implementation reproducibility): seed the
    xorshift64* state with splitmix64(seed), then Fisher-Yates from the top:
    for i = n-1 .. 1, draw j = next() mod (i + 1) and swap positions i, j.
    """
    rng = _XorShift64Star(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def split_dataset(dataset: Dataset, ratios=(0.70, 0.15, 0.15), seed: int = 0) -> Dataset:
    """Assign train/validation/test tags by seeded shuffle.

    Train takes floor(n * ratios[0]) pairs, validation floor(n * ratios[1]),
    test the remainder.  The returned dataset keeps the input pair order;
    only the split tags depend on the permutation.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DatasetError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1.0, got {sum(ratios)}")
    n = len(dataset)
    if n == 0:
        raise DatasetError("cannot split an empty dataset")
    # 1e-9 guard: 500 * 0.7 is 349.999... in binary floating point.
    n_train = math.floor(n * ratios[0] + 1e-9)
    n_val = math.floor(n * ratios[1] + 1e-9)
    perm = seeded_permutation(n, seed)
    assignment = {}
    for rank, original_pos in enumerate(perm):
        if rank < n_train:
            split = "train"
        elif rank < n_train + n_val:
            split = "validation"
        else:
            split = "test"
        assignment[original_pos] = split
    return Dataset(
        replace(pair, split=assignment[pos]) for pos, pair in enumerate(dataset)
    )
