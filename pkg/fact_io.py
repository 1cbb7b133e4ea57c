"""
Fact and annotation file reading/writing
One `[P::]head.` fact per line, `%` comments; CSV outputs for traces and recognitions
"""

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from errors import InvalidProbability, ParseError, ProbECError
from event_model import EventAtom, FactKind, FluentAtom, ProbFact, format_arg

logger = logging.getLogger(__name__)

FACT_GRAMMAR = r"""
    ?start: fact

    fact: (PROB "::")? atom "."

    ?atom: "happensAt" "(" term "," FRAME ")"            -> happens
         | "holdsAt" "(" term "=" value "," FRAME ")"     -> holds
         | "initially" "(" term "=" value ")"            -> initially

    term: NAME ("(" arg ("," arg)* ")")?

    ?arg: NAME                                -> symbol
        | SIGNED_INT                          -> number

    ?value: "true"                            -> true
          | "false"                           -> false
          | SIGNED_INT                        -> number
          | "(" SIGNED_INT "," SIGNED_INT ")"  -> pair

    PROB: /[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?/
    FRAME: /\d+/
    NAME: /[a-z][A-Za-z0-9_]*/
    COMMENT: /%[^\n]*/

    %import common.SIGNED_INT
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


@v_args(inline=True)
class _FactBuilder(Transformer):
    def symbol(self, token):
        return str(token)

    def number(self, token):
        return int(token)

    def true(self):
        return True

    def false(self):
        return False

    def pair(self, x, y):
        return (int(x), int(y))

    def term(self, name, *args):
        return str(name), tuple(args)

    def happens(self, term, frame):
        return FactKind.HAPPENS, EventAtom(*term), int(frame)

    def holds(self, term, value, frame):
        return FactKind.HOLDS, FluentAtom(term[0], term[1], value), int(frame)

    def initially(self, term, value):
        return FactKind.INITIALLY, FluentAtom(term[0], term[1], value), None

    def fact(self, *children):
        prob = float(children[0]) if len(children) == 2 else 1.0
        kind, atom, time = children[-1]
        return ProbFact(kind, atom, time, prob)


_FACT_PARSER = Lark(FACT_GRAMMAR, parser="lalr", transformer=_FactBuilder())


def _reason(exc, line):
    if isinstance(exc, UnexpectedEOF) or getattr(getattr(exc, "token", None), "type", None) == "$END":
        return "unexpected end of line (missing '.'?)"
    if isinstance(exc, UnexpectedCharacters):
        return f"unexpected character {line[exc.column - 1]!r}"
    expected = ", ".join(sorted(exc.expected)) if getattr(exc, "expected", None) else "?"
    return f"unexpected {exc.token!r}, expected one of: {expected}"


def _parse_line(line, number, source):
    try:
        return _FACT_PARSER.parse(line)
    except UnexpectedInput as exc:
        column = exc.column if getattr(exc, "column", -1) and exc.column > 0 else len(line) + 1
        raise ParseError(number, column, _reason(exc, line), source) from None
    except InvalidProbability as exc:
        raise InvalidProbability(exc.value, f"{source}:{number}") from None
    except VisitError as exc:
        if isinstance(exc.orig_exc, InvalidProbability):
            raise InvalidProbability(exc.orig_exc.value, f"{source}:{number}") from None
        if isinstance(exc.orig_exc, ProbECError):
            raise exc.orig_exc from None
        raise ParseError(number, 1, str(exc.orig_exc), source) from None


def _lines(text):
    if hasattr(text, "read"):
        text = text.read()
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("%"):
            yield number, line


def parse_facts(text, source="<input>"):
    """Parse a fact stream into ProbFacts, in file order"""
    facts = [_parse_line(line, number, source) for number, line in _lines(text)]
    logger.debug("parsed %d facts from %s", len(facts), source)
    return facts


def emit_facts(facts):
    facts = list(facts)
    if not facts:
        return ""
    return "\n".join(str(fact) for fact in facts) + "\n"


def read_facts(path):
    path = Path(path)
    return parse_facts(path.read_text(encoding="utf-8"), source=str(path))


def write_facts(facts, path):
    Path(path).write_text(emit_facts(facts), encoding="utf-8")


# Ground-truth annotation

def parse_annotation(text, source="<input>"):
    """Crisp `holdsAt(LTA(args)=V, T).` lines -> set of (FluentAtom, frame)"""
    truth = set()
    for number, line in _lines(text):
        if "::" in line:
            raise ParseError(number, line.index("::") + 1, "annotations are crisp; no probability prefix", source)
        fact = _parse_line(line, number, source)
        if fact.kind is not FactKind.HOLDS:
            raise ParseError(number, 1, f"annotations are holdsAt facts, got {fact.kind.value}", source)
        truth.add((fact.atom, fact.time))
    return truth


def emit_annotation(items):
    items = sorted(items, key=lambda item: (item[1], str(item[0])))
    return "".join(f"holdsAt({atom},{frame}).\n" for atom, frame in items)


def read_annotation(path):
    path = Path(path)
    return parse_annotation(path.read_text(encoding="utf-8"), source=str(path))


# CSV outputs

def fluent_label(atom):
    if atom.value is True:
        return atom.functor
    return f"{atom.functor}={atom.value}"


def join_args(args):
    return ":".join(format_arg(a) for a in args)


_INT = re.compile(r"^-?\d+$")


def split_args(text):
    if not isinstance(text, str) or text == "":
        return ()
    return tuple(int(part) if _INT.match(part) else part for part in text.split(":"))


def _atom_from_label(label, args):
    functor, _, value = str(label).partition("=")
    if not value:
        return FluentAtom(functor, split_args(args), True)
    if value in ("true", "false"):
        return FluentAtom(functor, split_args(args), value == "true")
    return FluentAtom(functor, split_args(args), int(value) if _INT.match(value) else value)


def trace_frame(traces):
    """Long table fluent,args,frame,probability over every frame of every trace"""
    rows = []
    for atom in sorted(traces, key=str):
        probs = traces[atom].probs
        label, args = fluent_label(atom), join_args(atom.args)
        rows.extend((label, args, frame, float(p)) for frame, p in enumerate(probs))
    return pd.DataFrame(rows, columns=["fluent", "args", "frame", "probability"])


def recognitions_frame(recognitions):
    rows = sorted(
        ((fluent_label(atom), join_args(atom.args), int(frame)) for atom, frame in recognitions),
        key=lambda row: (row[0], row[1], row[2]),
    )
    return pd.DataFrame(rows, columns=["fluent", "args", "frame"])


def write_trace_csv(traces, out):
    trace_frame(traces).to_csv(out, index=False, float_format="%.10g", lineterminator="\n")


def write_recognitions_csv(recognitions, out):
    recognitions_frame(recognitions).to_csv(out, index=False, lineterminator="\n")


def _read_table(source, columns):
    table = pd.read_csv(source, dtype={"fluent": str, "args": str, "frame": int}, keep_default_na=False)
    missing = set(columns) - set(table.columns)
    if missing:
        raise ProbECError(f"CSV lacks columns: {', '.join(sorted(missing))}")
    return table


def read_trace_csv(source):
    """Trace CSV -> {FluentAtom: probabilities indexed by frame}"""
    table = _read_table(source, ("fluent", "args", "frame", "probability"))
    horizon = int(table.frame.max()) if len(table) else -1
    traces = {}
    for row in table.itertuples(index=False):
        atom = _atom_from_label(row.fluent, row.args)
        probs = traces.setdefault(atom, np.zeros(horizon + 1))
        probs[int(row.frame)] = float(row.probability)
    return traces


def read_recognitions_csv(source, threshold=None):
    """Recognitions CSV -> {(FluentAtom, frame)}

    A trace CSV (with a probability column) is accepted when a threshold is
    given; frames strictly above it count as recognized.
    """
    table = _read_table(source, ("fluent", "args", "frame"))
    if "probability" in table.columns:
        if threshold is None:
            raise ProbECError("trace CSV given where recognitions are expected; pass a threshold")
        table = table[table.probability > threshold]
    return {
        (_atom_from_label(row.fluent, row.args), int(row.frame))
        for row in table.itertuples(index=False)
    }
