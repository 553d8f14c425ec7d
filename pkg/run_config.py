"""
Run configurations: a small ``key = value`` language with nested variety expressions.

    # Bl_2 of Sym^2 P^1
    variety = blowup(quotient(product(projective_space(1), projective_space(1)), swap), 2, -1)
    tasks = [verify-ck, poincare, murre-B, roundtrip]
    seed = 42

Parsing uses an arpeggio PEG grammar; the parse tree is turned into plain values by
a visitor and then validated into a RunConfig.
"""

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from arpeggio import EOF, NoMatch, Optional, ParserPython, PTNodeVisitor, ZeroOrMore, visit_parse_tree
from arpeggio import RegExMatch as _

from errors import ConfigParseError, ConfigSemanticError
from exactlin import Rational, rational

# Import configuration
try:
    from config import *
except ImportError:
    from config_template import *
    print("⚠️  Configuration file 'config.py' not found, using config_template.py defaults", file=sys.stderr)

KNOWN_TASKS = ("verify-ck", "poincare", "murre-B", "murre-Bprime", "murre-C", "murre-D",
               "lift", "blowdown", "roundtrip", "oracle-fuzz")
KNOWN_ACTIONS = ("swap", "trivial")
OUTPUT_FORMATS = ("text", "machine")


# Variety expressions

class VarietySpec:
    """Node of a variety expression tree."""

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ProjectiveSpaceSpec(VarietySpec):
    n: int

    def describe(self) -> str:
        return f"projective_space({self.n})"


@dataclass(frozen=True)
class ProductSpec(VarietySpec):
    left: VarietySpec
    right: VarietySpec

    def describe(self) -> str:
        return f"product({self.left.describe()}, {self.right.describe()})"


@dataclass(frozen=True)
class QuotientSpec(VarietySpec):
    base: VarietySpec
    action: str

    def describe(self) -> str:
        return f"quotient({self.base.describe()}, {self.action})"


@dataclass(frozen=True)
class BlowupSpec(VarietySpec):
    base: VarietySpec
    points: int
    multiplier: Rational

    def describe(self) -> str:
        return f"blowup({self.base.describe()}, {self.points}, {self.multiplier})"


@dataclass(frozen=True)
class RunConfig:
    variety: VarietySpec
    tasks: Tuple[str, ...]
    seed: int = DEFAULT_SEED
    output_format: str = DEFAULT_OUTPUT_FORMAT
    fuzz_cases: int = ORACLE_FUZZ_CASES
    name: str = ""

    def echo(self) -> Dict[str, Any]:
        """Configuration as it appears in machine reports."""
        return {
            "name": self.name,
            "variety": self.variety.describe(),
            "tasks": list(self.tasks),
            "seed": self.seed,
            "output_format": self.output_format,
            "fuzz_cases": self.fuzz_cases,
        }


# Grammar

def comment():
    return _(r'#[^\n]*')


def number():
    return _(r'[+-]?\d+(/\d+)?')


def identifier():
    return _(r'[A-Za-z_][A-Za-z0-9_\-]*')


def call():
    return identifier, "(", Optional(expression, ZeroOrMore(",", expression)), ")"


def expression():
    return [call, number, identifier]


def task_list():
    return "[", Optional(identifier, ZeroOrMore(",", identifier)), "]"


def value():
    return [task_list, expression]


def assignment():
    return identifier, "=", value


def config_file():
    return ZeroOrMore([assignment, ";"]), EOF


@dataclass(frozen=True)
class _Word:
    text: str
    position: int


@dataclass(frozen=True)
class _Number:
    text: str
    position: int


@dataclass(frozen=True)
class _Call:
    name: str
    args: Tuple[Any, ...]
    position: int


@dataclass(frozen=True)
class _TaskList:
    items: Tuple[_Word, ...]
    position: int


@dataclass(frozen=True)
class _Assignment:
    key: str
    value: Any
    position: int


def _payload(children) -> List[Any]:
    # punctuation may or may not be suppressed depending on the arpeggio version
    return [c for c in children if not isinstance(c, str)]


class _ConfigVisitor(PTNodeVisitor):
    def visit_number(self, node, children):
        return _Number(node.value, node.position)

    def visit_identifier(self, node, children):
        return _Word(node.value, node.position)

    def visit_call(self, node, children):
        parts = _payload(children)
        return _Call(parts[0].text, tuple(parts[1:]), node.position)

    def visit_expression(self, node, children):
        return _payload(children)[0]

    def visit_task_list(self, node, children):
        return _TaskList(tuple(_payload(children)), node.position)

    def visit_value(self, node, children):
        return _payload(children)[0]

    def visit_assignment(self, node, children):
        parts = _payload(children)
        return _Assignment(parts[0].text, parts[1], node.position)

    def visit_config_file(self, node, children):
        return [c for c in children if isinstance(c, _Assignment)]


_PARSER = None


def _parser() -> ParserPython:
    global _PARSER
    if _PARSER is None:
        _PARSER = ParserPython(config_file, comment_def=comment)
    return _PARSER


def parse_config_text(text: str) -> RunConfig:
    """
    Parse and validate configuration text.

    Args:
        text: Configuration source

    Returns:
        Validated RunConfig

    Raises:
        ConfigParseError: text does not match the grammar
        ConfigSemanticError: a field holds an unusable value
    """
    parser = _parser()
    try:
        tree = parser.parse(text)
    except NoMatch as err:
        line, column = parser.pos_to_linecol(err.position)
        raise ConfigParseError(f"syntax error: {err}", line, column) from err
    assignments = visit_parse_tree(tree, _ConfigVisitor())
    return _build_config(assignments or [])


def _is_file(source: Union[str, Path]) -> bool:
    try:
        return Path(source).is_file()
    except (OSError, ValueError):
        # over-long or NUL-containing inline text
        return False


def load_config(source: Union[str, Path]) -> RunConfig:
    """
    Load a RunConfig from a file path or from inline text.

    An existing file always wins; otherwise a string containing '=' is treated as
    inline configuration text.
    """
    if isinstance(source, str) and "=" in source and not _is_file(source):
        return parse_config_text(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigSemanticError("file", f"cannot read {path}: {e}") from e
    config = parse_config_text(text)
    if not config.name:
        config = RunConfig(config.variety, config.tasks, config.seed, config.output_format,
                           config.fuzz_cases, path.stem)
    return config


# Semantic validation

def _integer(node, path: str, minimum: int = None) -> int:
    if not isinstance(node, _Number) or "/" in node.text:
        raise ConfigSemanticError(path, "expected an integer")
    result = int(node.text)
    if minimum is not None and result < minimum:
        raise ConfigSemanticError(path, f"must be at least {minimum}, got {result}")
    return result


def _arity(node: _Call, path: str, allowed: Tuple[int, ...]):
    if len(node.args) not in allowed:
        expected = " or ".join(str(a) for a in allowed)
        raise ConfigSemanticError(path, f"{node.name} takes {expected} arguments, got {len(node.args)}")


def _variety(node, path: str) -> VarietySpec:
    if not isinstance(node, _Call):
        raise ConfigSemanticError(path, "expected a variety expression such as projective_space(2)")
    path = f"{path}.{node.name}"

    if node.name == "projective_space":
        _arity(node, path, (1,))
        return ProjectiveSpaceSpec(_integer(node.args[0], f"{path}.n", minimum=0))

    if node.name == "product":
        _arity(node, path, (2,))
        return ProductSpec(_variety(node.args[0], f"{path}.left"), _variety(node.args[1], f"{path}.right"))

    if node.name == "quotient":
        _arity(node, path, (2,))
        base = _variety(node.args[0], f"{path}.base")
        action = node.args[1]
        if not isinstance(action, _Word) or action.text not in KNOWN_ACTIONS:
            shown = getattr(action, "text", getattr(action, "name", "?"))
            raise ConfigSemanticError(f"{path}.action",
                                      f"unknown action {shown!r}; known actions: {', '.join(KNOWN_ACTIONS)}")
        if action.text == "swap" and (not isinstance(base, ProductSpec) or base.left != base.right):
            raise ConfigSemanticError(f"{path}.action", "swap needs a product of two equal varieties")
        return QuotientSpec(base, action.text)

    if node.name == "blowup":
        _arity(node, path, (2, 3))
        base = _variety(node.args[0], f"{path}.base")
        points = _integer(node.args[1], f"{path}.points", minimum=0)
        multiplier = rational(DEFAULT_MULTIPLIER)
        if len(node.args) == 3:
            if not isinstance(node.args[2], _Number):
                raise ConfigSemanticError(f"{path}.multiplier", "expected a rational number")
            multiplier = rational(node.args[2].text)
        if multiplier == 0:
            raise ConfigSemanticError(f"{path}.multiplier", "must be nonzero")
        return BlowupSpec(base, points, multiplier)

    raise ConfigSemanticError(path, "unknown variety; use projective_space, product, quotient or blowup")


def _build_config(assignments: List[_Assignment]) -> RunConfig:
    fields: Dict[str, Any] = {}
    for item in assignments:
        if item.key in fields:
            raise ConfigSemanticError(item.key, "given more than once")
        fields[item.key] = item.value

    known = ("variety", "tasks", "seed", "output_format", "fuzz_cases", "name")
    for key in fields:
        if key not in known:
            raise ConfigSemanticError(key, f"unknown key; known keys: {', '.join(known)}")
    for key in ("variety", "tasks"):
        if key not in fields:
            raise ConfigSemanticError(key, "missing")

    variety = _variety(fields["variety"], "variety")

    task_node = fields["tasks"]
    if not isinstance(task_node, _TaskList):
        raise ConfigSemanticError("tasks", "expected a list such as [verify-ck, poincare]")
    tasks = []
    for index, word in enumerate(task_node.items):
        if word.text not in KNOWN_TASKS:
            raise ConfigSemanticError(f"tasks[{index}]",
                                      f"unknown task {word.text!r}; known tasks: {', '.join(KNOWN_TASKS)}")
        if word.text not in tasks:
            tasks.append(word.text)
    if not tasks:
        raise ConfigSemanticError("tasks", "task list is empty")

    seed = _integer(fields["seed"], "seed") if "seed" in fields else DEFAULT_SEED
    fuzz_cases = _integer(fields["fuzz_cases"], "fuzz_cases", minimum=1) if "fuzz_cases" in fields \
        else ORACLE_FUZZ_CASES

    output_format = DEFAULT_OUTPUT_FORMAT
    if "output_format" in fields:
        node = fields["output_format"]
        if not isinstance(node, _Word) or node.text not in OUTPUT_FORMATS:
            raise ConfigSemanticError("output_format", f"expected one of {', '.join(OUTPUT_FORMATS)}")
        output_format = node.text

    name = ""
    if "name" in fields:
        if not isinstance(fields["name"], _Word):
            raise ConfigSemanticError("name", "expected an identifier")
        name = fields["name"].text

    return RunConfig(variety, tuple(tasks), seed, output_format, fuzz_cases, name)
