"""
Rule language for long-term activity definitions
Parses `initiatedAt/terminatedAt` rules into an AST, checks them and
loads the bundled activity rule file
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from pathlib import Path

import networkx as nx
from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedInput

from config import BUNDLED_RULES_PATH, ActivityThresholds
from errors import (
    CyclicFluentDependency,
    ParseError,
    UnboundBodyVariable,
    UnboundHeadVariable,
    UnknownFluent,
)
from event_model import SPATIAL_FLUENTS

logger = logging.getLogger(__name__)

BUILTIN_FLUENTS = frozenset({"close", "distance"})
BUILTIN_ARITY = {"close": 3, "distance": 2}

RULE_GRAMMAR = r"""
    start: rule*

    rule: head ":-" literal ("," literal)* "."

    head: "initiatedAt" "(" term "=" value "," VAR ")"     -> initiated
        | "terminatedAt" "(" term "=" value "," VAR ")"    -> terminated

    ?literal: "happensAt" "(" term "," VAR ")"                  -> happens
            | "holdsAt" "(" term "=" value "," VAR ")"           -> holds
            | "not" "happensAt" "(" term "," VAR ")"            -> not_happens
            | "not" "holdsAt" "(" term "=" value "," VAR ")"     -> not_holds
            | expr comparator expr                              -> compare

    ?expr: "abs" "(" operand "-" operand ")"    -> absdiff
         | operand

    ?operand: VAR                               -> variable
            | NUMBER                            -> number

    comparator: "<"     -> lt
              | "=<"    -> le
              | "<="    -> le
              | ">"     -> gt
              | ">="    -> ge
              | "="     -> eq
              | "\\="   -> ne
              | "!="    -> ne

    term: NAME ("(" arg ("," arg)* ")")?

    ?arg: VAR                                   -> variable
        | NAME                                  -> symbol
        | NUMBER                                -> number

    ?value: "true"                              -> true
          | "false"                             -> false
          | VAR                                 -> variable
          | NUMBER                              -> number
          | "(" arg "," arg ")"                 -> pair

    VAR: /[A-Z_][A-Za-z0-9_]*/
    NAME: /[a-z][A-Za-z0-9_]*/
    NUMBER: /\d+(\.\d+)?/
    COMMENT: /%[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_RULE_PARSER = Lark(RULE_GRAMMAR, parser="lalr", propagate_positions=True)

COMPARATORS = {
    "lt": "<",
    "le": "=<",
    "gt": ">",
    "ge": ">=",
    "eq": "=",
    "ne": "\\=",
}


# ---- AST ------------------------------------------------------------------

def _format_constant(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant:
    value: object

    def __str__(self):
        return _format_constant(self.value)


@dataclass(frozen=True)
class Pair:
    x: object
    y: object

    def __str__(self):
        return f"({self.x}, {self.y})"


@dataclass(frozen=True)
class TermPattern:
    functor: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.functor
        return f"{self.functor}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class HappensAt:
    term: TermPattern
    time: str
    line: int = field(default=0, compare=False)

    def __str__(self):
        return f"happensAt({self.term}, {self.time})"


@dataclass(frozen=True)
class HoldsAt:
    term: TermPattern
    value: object
    time: str
    line: int = field(default=0, compare=False)

    def __str__(self):
        return f"holdsAt({self.term}={self.value}, {self.time})"


@dataclass(frozen=True)
class NegFact:
    """`not happensAt(...)`: an input event that must not be detected"""

    literal: HappensAt

    def __str__(self):
        return f"not {self.literal}"


@dataclass(frozen=True)
class NegGoal:
    """`not holdsAt(...)`: a goal that must not be inferable"""

    literal: HoldsAt

    def __str__(self):
        return f"not {self.literal}"


@dataclass(frozen=True)
class AbsDiff:
    left: object
    right: object

    def __str__(self):
        return f"abs({self.left} - {self.right})"


@dataclass(frozen=True)
class Compare:
    left: object
    op: str
    right: object
    line: int = field(default=0, compare=False)

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Head:
    kind: str
    term: TermPattern
    value: object
    time: str

    def __str__(self):
        return f"{self.kind}({self.term}={self.value}, {self.time})"


@dataclass(frozen=True)
class Rule:
    head: Head
    body: tuple
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def functor(self):
        return self.head.term.functor

    @property
    def is_initiation(self):
        return self.head.kind == "initiatedAt"

    @cached_property
    def ordered_body(self):
        """Evaluation order: events, then fluents, then comparisons, then negations"""
        events = [lit for lit in self.body if isinstance(lit, HappensAt)]
        fluents = [lit for lit in self.body if isinstance(lit, HoldsAt)]
        compares = [lit for lit in self.body if isinstance(lit, Compare)]
        negations = [lit for lit in self.body if isinstance(lit, (NegFact, NegGoal))]
        return tuple(events + fluents + compares + negations)

    def __str__(self):
        body = ",\n    ".join(str(lit) for lit in self.body)
        return f"{self.head} :-\n    {body}."


def variables_of(node):
    """Variable names occurring in an AST node"""
    if isinstance(node, Variable):
        return {node.name}
    if isinstance(node, Constant) or node is None:
        return set()
    if isinstance(node, Pair):
        return variables_of(node.x) | variables_of(node.y)
    if isinstance(node, TermPattern):
        names = set()
        for arg in node.args:
            names |= variables_of(arg)
        return names
    if isinstance(node, AbsDiff):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, Compare):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, HappensAt):
        return variables_of(node.term)
    if isinstance(node, (HoldsAt, Head)):
        return variables_of(node.term) | variables_of(node.value)
    if isinstance(node, (NegFact, NegGoal)):
        return variables_of(node.literal)
    raise TypeError(f"not an AST node: {node!r}")


def binding_variables(literal):
    """Variables a positive literal binds when it succeeds"""
    if isinstance(literal, HoldsAt) and literal.term.functor == "close":
        entities = literal.term.args[:2]
        return set().union(*(variables_of(a) for a in entities)) | variables_of(literal.value)
    return variables_of(literal)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple
    input_fluents: frozenset = SPATIAL_FLUENTS

    builtins = BUILTIN_FLUENTS

    @cached_property
    def derived(self):
        """Fluents defined by at least one initiatedAt rule"""
        return frozenset(rule.functor for rule in self.rules if rule.is_initiation)

    @cached_property
    def _by_head(self):
        table = {}
        for rule in self.rules:
            table.setdefault((rule.head.kind, rule.functor), []).append(rule)
        return {key: tuple(value) for key, value in table.items()}

    def initiation_rules(self, functor=None):
        if functor is None:
            return tuple(r for r in self.rules if r.is_initiation)
        return self._by_head.get(("initiatedAt", functor), ())

    def termination_rules(self, functor):
        return self._by_head.get(("terminatedAt", functor), ())

    @cached_property
    def dependency_graph(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(self.derived))
        for rule in self.rules:
            for lit in rule.body:
                target = lit.literal if isinstance(lit, NegGoal) else lit
                if isinstance(target, HoldsAt) and target.term.functor in self.derived:
                    graph.add_edge(target.term.functor, rule.functor)
        return graph

    @cached_property
    def dependency_order(self):
        """Derived fluents, each after the fluents its rules consult"""
        return tuple(nx.lexicographical_topological_sort(self.dependency_graph))

    def __str__(self):
        return format_rules(self)


def format_rules(ruleset):
    return "\n\n".join(str(rule) for rule in ruleset.rules) + "\n"


# ---- parse tree -> AST ----------------------------------------------------

def _number(token):
    text = str(token)
    return float(text) if "." in text else int(text)


class _RuleBuilder:
    def __init__(self, source):
        self.source = source

    def rules(self, tree):
        return tuple(self.rule(child) for child in tree.children)

    def rule(self, tree):
        head_tree, *literal_trees = tree.children
        return Rule(
            head=self.head(head_tree),
            body=tuple(self.literal(lit) for lit in literal_trees),
            line=tree.meta.line,
            column=tree.meta.column,
        )

    def head(self, tree):
        term, value, time = tree.children
        kind = "initiatedAt" if tree.data == "initiated" else "terminatedAt"
        return Head(kind, self.term(term), self.value(value), str(time))

    def literal(self, tree):
        line = tree.meta.line if not tree.meta.empty else 0
        kind = tree.data
        if kind == "happens":
            term, time = tree.children
            return HappensAt(self.term(term), str(time), line)
        if kind == "holds":
            term, value, time = tree.children
            return HoldsAt(self.term(term), self.value(value), str(time), line)
        if kind == "not_happens":
            term, time = tree.children
            return NegFact(HappensAt(self.term(term), str(time), line))
        if kind == "not_holds":
            term, value, time = tree.children
            return NegGoal(HoldsAt(self.term(term), self.value(value), str(time), line))
        if kind == "compare":
            left, op, right = tree.children
            return Compare(self.expr(left), COMPARATORS[op.data], self.expr(right), line)
        raise ParseError(line, 1, f"unknown literal {kind}", self.source)

    def term(self, tree):
        name, *args = tree.children
        return TermPattern(str(name), tuple(self.value(arg) for arg in args))

    def expr(self, tree):
        if tree.data == "absdiff":
            left, right = tree.children
            return AbsDiff(self.value(left), self.value(right))
        return self.value(tree)

    def value(self, node):
        if isinstance(node, Token):
            return Constant(_number(node)) if node.type == "NUMBER" else Variable(str(node))
        kind = node.data
        if kind == "true":
            return Constant(True)
        if kind == "false":
            return Constant(False)
        if kind == "variable":
            return Variable(str(node.children[0]))
        if kind == "symbol":
            return Constant(str(node.children[0]))
        if kind == "number":
            return Constant(_number(node.children[0]))
        if kind == "pair":
            x, y = node.children
            return Pair(self.value(x), self.value(y))
        raise ParseError(0, 0, f"unexpected node {kind}", self.source)


# ---- checks ---------------------------------------------------------------

def _check_rule(rule, known_fluents, source):
    head = rule.head

    if head.term.functor in BUILTIN_FLUENTS or head.term.functor in known_fluents["input"]:
        raise ParseError(rule.line, rule.column, f"{head.term.functor} is not a derivable fluent", source)

    for lit in rule.body:
        target = lit.literal if isinstance(lit, (NegFact, NegGoal)) else lit
        if isinstance(target, (HappensAt, HoldsAt)):
            if target.time != head.time:
                raise ParseError(
                    target.line or rule.line, 1,
                    f"time variable {target.time} differs from head time variable {head.time}",
                    source,
                )
        if isinstance(target, HoldsAt):
            functor = target.term.functor
            if functor in BUILTIN_ARITY and len(target.term.args) != BUILTIN_ARITY[functor]:
                raise ParseError(
                    target.line or rule.line, 1,
                    f"{functor} takes {BUILTIN_ARITY[functor]} arguments",
                    source,
                )
            if functor not in known_fluents["all"]:
                raise UnknownFluent(functor, rule)

    if head.time in set().union(*(variables_of(lit) for lit in rule.body), variables_of(head)):
        raise ParseError(rule.line, rule.column, f"time variable {head.time} used as an argument", source)

    bound = set()
    for lit in rule.body:
        if isinstance(lit, (HappensAt, HoldsAt)):
            bound |= binding_variables(lit)

    # terminations are evaluated for a given fluent atom, so their head is bound by the caller
    if rule.is_initiation:
        for name in sorted(variables_of(head)):
            if name not in bound:
                raise UnboundHeadVariable(rule, name)
    else:
        bound |= variables_of(head)

    for lit in rule.body:
        needs = set()
        if isinstance(lit, (NegFact, NegGoal, Compare)):
            needs = variables_of(lit)
        elif isinstance(lit, HoldsAt) and lit.term.functor == "close":
            needs = variables_of(lit.term.args[2])
        for name in sorted(needs - bound):
            raise UnboundBodyVariable(rule, name)


def check_ruleset(ruleset, source="<rules>"):
    """Static checks: time variables, range restriction, safety, known fluents, acyclicity"""
    known = {
        "input": ruleset.input_fluents,
        "all": ruleset.input_fluents | BUILTIN_FLUENTS | ruleset.derived,
    }
    for rule in ruleset.rules:
        _check_rule(rule, known, source)

    graph = ruleset.dependency_graph
    if not nx.is_directed_acyclic_graph(graph):
        edges = nx.find_cycle(graph)
        raise CyclicFluentDependency([u for u, _ in edges] + [edges[0][0]])
    return ruleset


def parse_rules(text, source="<rules>", input_fluents=SPATIAL_FLUENTS):
    """Parse and check a rule file"""
    if hasattr(text, "read"):
        text = text.read()
    try:
        tree = _RULE_PARSER.parse(text)
    except UnexpectedInput as exc:
        line = getattr(exc, "line", -1)
        column = getattr(exc, "column", -1)
        token = getattr(exc, "token", None)
        reason = f"unexpected {token!r}" if token is not None else "syntax error"
        raise ParseError(max(line, 1), max(column, 1), reason, source) from None

    ruleset = RuleSet(_RuleBuilder(source).rules(tree), frozenset(input_fluents))
    check_ruleset(ruleset, source)
    logger.debug(
        "parsed %d rules from %s; derived fluents in order: %s",
        len(ruleset.rules), source, ", ".join(ruleset.dependency_order),
    )
    return ruleset


# ---- thresholds -----------------------------------------------------------

def _rethreshold_literal(lit, close, orientation):
    if isinstance(lit, HoldsAt) and lit.term.functor == "close" and close is not None:
        a, b, limit = lit.term.args
        if isinstance(limit, Constant):
            return replace(lit, term=TermPattern("close", (a, b, Constant(close))))
    if isinstance(lit, NegGoal):
        return NegGoal(_rethreshold_literal(lit.literal, close, orientation))
    if (
        isinstance(lit, Compare)
        and orientation is not None
        and isinstance(lit.left, AbsDiff)
        and isinstance(lit.right, Constant)
    ):
        return replace(lit, right=Constant(orientation))
    return lit


def with_thresholds(ruleset, thresholds):
    """Replace the close/orientation constants of each activity by the configured ones"""
    rules = []
    for rule in ruleset.rules:
        close = thresholds.close_for(rule.functor)
        orientation = thresholds.moving_orientation if rule.functor == "moving" else None
        body = tuple(_rethreshold_literal(lit, close, orientation) for lit in rule.body)
        rules.append(replace(rule, body=body))
    return RuleSet(tuple(rules), ruleset.input_fluents)


def close_thresholds(ruleset, functor):
    """Close thresholds used by the rules of one fluent"""
    found = set()
    for rule in ruleset.initiation_rules(functor) + ruleset.termination_rules(functor):
        for lit in rule.body:
            target = lit.literal if isinstance(lit, NegGoal) else lit
            if isinstance(target, HoldsAt) and target.term.functor == "close":
                limit = target.term.args[2]
                if isinstance(limit, Constant):
                    found.add(limit.value)
    return found


@lru_cache(maxsize=4)
def _bundled_rules(path):
    return parse_rules(Path(path).read_text(encoding="utf-8"), source=str(path))


def builtin_activity_rules(thresholds=None):
    """The bundled person / leaving_object / meeting / moving / fighting definitions"""
    ruleset = _bundled_rules(str(BUNDLED_RULES_PATH))
    return with_thresholds(ruleset, thresholds or ActivityThresholds())


def load_rules(path=None, thresholds=None):
    """Bundled rules when path is None or the bundled file, else the given rule file"""
    if path is None or Path(path).resolve() == BUNDLED_RULES_PATH.resolve():
        return builtin_activity_rules(thresholds)
    path = Path(path)
    return parse_rules(path.read_text(encoding="utf-8"), source=str(path))
