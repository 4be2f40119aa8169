"""Canonicalization of LaTeX equation strings.

Scoring generated equations against ground truth should not punish surface
differences: delimiters, spacing commands, whitespace, stray sentence
punctuation, or Greek letters written as ``\\alpha`` vs the literal character.
``normalize`` reduces a string to a canonical form in which exactly those
differences vanish while semantic commands (``\\frac``, ``\\sum``, function
names, operators) survive untouched.

Normalization is total: malformed or unbalanced input is never rejected,
only the defined removals and substitutions are applied.  The default rule
set ships as a versioned JSON file (``data/normalizer_default.json``) so
metric scores are reproducible bit-for-bit; custom rule sets load through
``NormalizationConfig.from_json``.

Known non-equivalence: a bare trailing backslash swallows a following
delimiter character into an escape token (``"$x\\$"`` keeps ``\\$``), so
delimiter invariance is guaranteed only for inputs that do not end in a
lone backslash.
"""

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

# Greek letter names in alphabet order with their Latin substitutions.
# Multi-letter forms (th, xi, ch, ps) avoid collisions with existing Latin
# variables (x in particular).  Uppercase maps to the capitalized form.
_GREEK_LETTERS = [
    ("alpha", "α", "Α", "a"),
    ("beta", "β", "Β", "b"),
    ("gamma", "γ", "Γ", "g"),
    ("delta", "δ", "Δ", "d"),
    ("epsilon", "ε", "Ε", "e"),
    ("zeta", "ζ", "Ζ", "z"),
    ("eta", "η", "Η", "h"),
    ("theta", "θ", "Θ", "th"),
    ("iota", "ι", "Ι", "i"),
    ("kappa", "κ", "Κ", "k"),
    ("lambda", "λ", "Λ", "l"),
    ("mu", "μ", "Μ", "m"),
    ("nu", "ν", "Ν", "n"),
    ("xi", "ξ", "Ξ", "xi"),
    ("omicron", "ο", "Ο", "o"),
    ("pi", "π", "Π", "p"),
    ("rho", "ρ", "Ρ", "r"),
    ("sigma", "σ", "Σ", "s"),
    ("tau", "τ", "Τ", "t"),
    ("upsilon", "υ", "Υ", "u"),
    ("phi", "φ", "Φ", "f"),
    ("chi", "χ", "Χ", "ch"),
    ("psi", "ψ", "Ψ", "ps"),
    ("omega", "ω", "Ω", "w"),
]

GREEK_COMMAND_NAMES = tuple(name for name, _, _, _ in _GREEK_LETTERS)


def build_greek_map() -> dict:
    """Full Greek->Latin table: command and literal forms, both cases."""
    table = {}
    for name, lower_char, upper_char, latin in _GREEK_LETTERS:
        table["\\" + name] = latin
        table["\\" + name.capitalize()] = latin.capitalize()
        table[lower_char] = latin
        table[upper_char] = latin.capitalize()
    table["ς"] = "s"  # word-final sigma variant
    return table


_TOKEN_RE = re.compile(
    r"\\[a-zA-Z]+"  # command word
    r"|\\[^a-zA-Z\s]"  # backslash escape: \, \; \{ etc.
    r"|\d+"  # digit run
    r"|[a-zA-Z]+"  # ASCII letter run
    r"|\S"  # anything else, one character at a time
)


def tokenize_latex(latex: str) -> list:
    """Split into LaTeX surface tokens, discarding whitespace.

    Joining the tokens reproduces the input minus whitespace.
    """
    return _TOKEN_RE.findall(latex)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationConfig:
    delimiter_strip_set: tuple = (
        "$$",
        "$",
        "\\(",
        "\\)",
        "\\[",
        "\\]",
        "\\begin{equation*}",
        "\\end{equation*}",
        "\\begin{equation}",
        "\\end{equation}",
    )
    formatting_command_strip_set: tuple = (
        "\\left",
        "\\right",
        "\\,",
        "\\;",
        "\\quad",
        "\\qquad",
        "\\displaystyle",
    )
    greek_map: Mapping[str, str] = field(default_factory=build_greek_map)
    punctuation_strip_set: frozenset = frozenset({".", ",", ";", "!", "?"})
    lowercase: bool = False

    def __post_init__(self):
        object.__setattr__(self, "delimiter_strip_set", tuple(self.delimiter_strip_set))
        object.__setattr__(
            self, "formatting_command_strip_set", tuple(self.formatting_command_strip_set)
        )
        object.__setattr__(self, "greek_map", dict(self.greek_map))
        object.__setattr__(
            self, "punctuation_strip_set", frozenset(self.punctuation_strip_set)
        )
        for name, lower_char, upper_char, _ in _GREEK_LETTERS:
            for key in ("\\" + name, "\\" + name.capitalize(), lower_char, upper_char):
                if key not in self.greek_map:
                    raise ConfigError(f"greek_map is missing {key!r}")
        overlap = (
            set(self.delimiter_strip_set) | set(self.formatting_command_strip_set)
        ) & set(self.greek_map)
        if overlap:
            raise ConfigError(f"strip sets overlap greek_map keys: {sorted(overlap)}")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "delimiter_strip_set": list(self.delimiter_strip_set),
            "formatting_command_strip_set": list(self.formatting_command_strip_set),
            "greek_map": dict(self.greek_map),
            "punctuation_strip_set": sorted(self.punctuation_strip_set),
            "lowercase": self.lowercase,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationConfig":
        return cls(
            delimiter_strip_set=tuple(data["delimiter_strip_set"]),
            formatting_command_strip_set=tuple(data["formatting_command_strip_set"]),
            greek_map=data["greek_map"],
            punctuation_strip_set=frozenset(data["punctuation_strip_set"]),
            lowercase=bool(data.get("lowercase", False)),
        )

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "NormalizationConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_config() -> NormalizationConfig:
    """The rule set shipped with the package (data/normalizer_default.json)."""
    ref = resources.files("speech2latex").joinpath("data/normalizer_default.json")
    return NormalizationConfig.from_dict(json.loads(ref.read_text(encoding="utf-8")))


def map_greek(token: str, config: NormalizationConfig = None) -> str:
    """Latin substitution for a Greek command or literal token; identity otherwise."""
    config = config or default_config()
    return config.greek_map.get(token, token)


def _delimiter_sequences(config: NormalizationConfig) -> tuple:
    seqs = [tuple(tokenize_latex(d)) for d in config.delimiter_strip_set]
    seqs = [s for s in seqs if s]
    seqs.sort(key=len, reverse=True)
    return tuple(seqs)


def _strip_delimiters(tokens: list, seqs: tuple) -> list:
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        matched = False
        for seq in seqs:
            end = i + len(seq)
            if end <= n and tuple(tokens[i:end]) == seq:
                i = end
                matched = True
                break
        if not matched:
            out.append(tokens[i])
            i += 1
    return out


def _collapse_script_braces(tokens: list) -> list:
    # ^{T} / _{T} with T a single non-brace token becomes ^T / _T.
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        if (
            tokens[i] in ("^", "_")
            and i + 3 < n
            and tokens[i + 1] == "{"
            and tokens[i + 3] == "}"
            and tokens[i + 2] not in ("{", "}")
        ):
            out.append(tokens[i])
            out.append(tokens[i + 2])
            i += 4
        else:
            out.append(tokens[i])
            i += 1
    return out


def normalize(latex: str, config: NormalizationConfig = None) -> str:
    """Reduce a LaTeX string to canonical comparison form.

    Removes delimiters and formatting commands, drops all whitespace,
    substitutes Greek letters, collapses singleton script braces, and strips
    sentence punctuation from the string boundaries.  Idempotent.
    """
    config = config or default_config()
    tokens = tokenize_latex(latex)
    tokens = _strip_delimiters(tokens, _delimiter_sequences(config))
    strip = set(config.formatting_command_strip_set)
    tokens = [t for t in tokens if t not in strip]
    greek = config.greek_map
    tokens = [greek.get(t, t) for t in tokens]
    tokens = _collapse_script_braces(tokens)
    out = "".join(tokens)
    if config.lowercase:
        out = out.lower()
    punct = config.punctuation_strip_set
    start, end = 0, len(out)
    while start < end and out[start] in punct:
        start += 1
    while end > start and out[end - 1] in punct:
        end -= 1
    return out[start:end]
