"""
Reduced ordered binary decision diagrams over independent probabilistic facts
Formulas, a hash-consed BDD manager, exact probability and a possible-worlds oracle
"""

from dataclasses import dataclass, field

import numpy as np

from errors import TooManyVars, VarNotInOrder

ENUMERATION_LIMIT = 25
_CHUNK_BITS = 16


# ---- formulas -------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    """One probabilistic fact; equality is on id only"""

    id: int
    prob: float = field(default=0.5, compare=False)
    label: str = field(default="", compare=False)

    def __str__(self):
        return self.label or f"x{self.id}"


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, eq=False)
class Not:
    operand: object

    def __str__(self):
        return f"¬{self.operand}"


@dataclass(frozen=True, eq=False)
class And:
    operands: tuple

    def __str__(self):
        return "(" + " ∧ ".join(str(f) for f in self.operands) + ")"


@dataclass(frozen=True, eq=False)
class Or:
    operands: tuple

    def __str__(self):
        return "(" + " ∨ ".join(str(f) for f in self.operands) + ")"


def _key(formula):
    return ("v", formula.id) if isinstance(formula, Var) else id(formula)


def _flatten(formulas, kind, absorbing, neutral):
    parts = []
    seen = set()
    for formula in formulas:
        items = formula.operands if isinstance(formula, kind) else (formula,)
        for item in items:
            if isinstance(item, Const):
                if item.value == absorbing.value:
                    return absorbing
                continue
            key = _key(item)
            if key not in seen:
                seen.add(key)
                parts.append(item)
    if not parts:
        return neutral
    if len(parts) == 1:
        return parts[0]
    return kind(tuple(parts))


def conj(*formulas):
    return _flatten(formulas, And, FALSE, TRUE)


def disj(*formulas):
    return _flatten(formulas, Or, TRUE, FALSE)


def neg(formula):
    if isinstance(formula, Const):
        return FALSE if formula.value else TRUE
    if isinstance(formula, Not):
        return formula.operand
    return Not(formula)


def variables(formula):
    """Distinct variables of a formula, sorted by id"""
    found = {}
    visited = set()
    stack = [formula]
    while stack:
        node = stack.pop()
        if id(node) in visited:
            continue
        visited.add(id(node))
        if isinstance(node, Var):
            found.setdefault(node.id, node)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.extend(node.operands)
    return [found[k] for k in sorted(found)]


def evaluate(formula, assignment):
    """Truth value under a {var id: bool} assignment"""
    if isinstance(formula, Const):
        return formula.value
    if isinstance(formula, Var):
        return bool(assignment[formula.id])
    if isinstance(formula, Not):
        return not evaluate(formula.operand, assignment)
    if isinstance(formula, And):
        return all(evaluate(f, assignment) for f in formula.operands)
    return any(evaluate(f, assignment) for f in formula.operands)


# ---- BDD ------------------------------------------------------------------

_TERMINAL_LEVEL = float("inf")
_AND, _OR = "and", "or"


class BddManager:
    """Hash-consed node table for one variable order

    Node 0 is FALSE, node 1 is TRUE; other nodes are (level, low, high).
    """

    def __init__(self, order=()):
        self._vars = []
        self._levels = {}
        self._nodes = [(_TERMINAL_LEVEL, 0, 0), (_TERMINAL_LEVEL, 1, 1)]
        self._unique = {}
        self._apply_cache = {}
        self._negate_cache = {}
        self._compiled = {}
        for var in order:
            self.add_var(var)

    def add_var(self, var):
        if var.id not in self._levels:
            self._levels[var.id] = len(self._vars)
            self._vars.append(var)

    @property
    def order(self):
        return tuple(self._vars)

    def __len__(self):
        return len(self._nodes)

    def _make(self, level, low, high):
        if low == high:
            return low
        key = (level, low, high)
        node = self._unique.get(key)
        if node is None:
            node = len(self._nodes)
            self._nodes.append(key)
            self._unique[key] = node
        return node

    def node(self, u):
        return self._nodes[u]

    def var_at(self, level):
        return self._vars[level]

    def var_node(self, var):
        level = self._levels.get(var.id)
        if level is None:
            raise VarNotInOrder(var)
        return self._make(level, 0, 1)

    def _cofactors(self, u, level):
        node_level, low, high = self._nodes[u]
        if node_level == level:
            return low, high
        return u, u

    def apply(self, op, u, v):
        if op == _AND:
            if u == 0 or v == 0:
                return 0
            if u == 1:
                return v
            if v == 1 or u == v:
                return u
        else:
            if u == 1 or v == 1:
                return 1
            if u == 0:
                return v
            if v == 0 or u == v:
                return u
        if u > v:
            u, v = v, u
        key = (op, u, v)
        cached = self._apply_cache.get(key)
        if cached is not None:
            return cached

        level = min(self._nodes[u][0], self._nodes[v][0])
        u0, u1 = self._cofactors(u, level)
        v0, v1 = self._cofactors(v, level)
        result = self._make(level, self.apply(op, u0, v0), self.apply(op, u1, v1))
        self._apply_cache[key] = result
        return result

    def conjoin(self, u, v):
        return self.apply(_AND, u, v)

    def disjoin(self, u, v):
        return self.apply(_OR, u, v)

    def negate(self, u):
        if u < 2:
            return 1 - u
        cached = self._negate_cache.get(u)
        if cached is not None:
            return cached
        level, low, high = self._nodes[u]
        result = self._make(level, self.negate(low), self.negate(high))
        self._negate_cache[u] = result
        return result

    def build(self, formula):
        """Node for a formula; sub-formulas are memoised by identity"""
        key = id(formula)
        hit = self._compiled.get(key)
        if hit is not None and hit[0] is formula:
            return hit[1]

        if isinstance(formula, Const):
            node = 1 if formula.value else 0
        elif isinstance(formula, Var):
            node = self.var_node(formula)
        elif isinstance(formula, Not):
            node = self.negate(self.build(formula.operand))
        elif isinstance(formula, And):
            node = 1
            for operand in formula.operands:
                node = self.conjoin(node, self.build(operand))
                if node == 0:
                    break
        elif isinstance(formula, Or):
            node = 0
            for operand in formula.operands:
                node = self.disjoin(node, self.build(operand))
                if node == 1:
                    break
        else:
            raise TypeError(f"not a formula: {formula!r}")

        # keep the formula alive so its id is not reused
        self._compiled[key] = (formula, node)
        return node

    def compile(self, formula):
        return Bdd(self, self.build(formula))

    def probability(self, u, memo=None):
        memo = {} if memo is None else memo
        if u < 2:
            return float(u)
        hit = memo.get(u)
        if hit is not None:
            return hit
        level, low, high = self._nodes[u]
        p = self._vars[level].prob
        result = p * self.probability(high, memo) + (1.0 - p) * self.probability(low, memo)
        memo[u] = result
        return result

    def reachable(self, u):
        seen = []
        visited = set()
        stack = [u]
        while stack:
            node = stack.pop()
            if node < 2 or node in visited:
                continue
            visited.add(node)
            seen.append(node)
            _, low, high = self._nodes[node]
            stack.extend((high, low))
        return seen


class Bdd:
    """A root in a manager's node table"""

    def __init__(self, manager, root):
        self.manager = manager
        self.root = root

    def probability(self):
        return self.manager.probability(self.root)

    def size(self):
        """Number of decision (non-terminal) nodes"""
        return len(self.manager.reachable(self.root))

    @property
    def is_true(self):
        return self.root == 1

    @property
    def is_false(self):
        return self.root == 0

    def structure(self):
        """Manager-independent shape: (var id, low, high) per node in DFS order"""
        nodes = self.manager.reachable(self.root)
        position = {0: "F", 1: "T"}
        position.update({node: i for i, node in enumerate(nodes)})
        shape = []
        for node in nodes:
            level, low, high = self.manager.node(node)
            shape.append((self.manager.var_at(level).id, position[low], position[high]))
        return position[self.root], tuple(shape)

    def __eq__(self, other):
        if not isinstance(other, Bdd):
            return NotImplemented
        if other.manager is self.manager:
            return other.root == self.root
        return self.structure() == other.structure()

    def __hash__(self):
        return hash(self.structure())

    def to_dot(self, name="bdd"):
        lines = [f"digraph {name} {{", '  F [shape=box,label="0"];', '  T [shape=box,label="1"];']
        ref = {0: "F", 1: "T"}
        nodes = self.manager.reachable(self.root)
        for node in nodes:
            ref[node] = f"n{node}"
        for node in nodes:
            level, low, high = self.manager.node(node)
            lines.append(f'  n{node} [label="{self.manager.var_at(level)}"];')
            lines.append(f'  n{node} -> {ref[high]} [label="high"];')
            lines.append(f'  n{node} -> {ref[low]} [label="low",style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def compile(formula, order=None):
    """Compile a formula; the default order is ascending var id (fact table order)"""
    if order is None:
        order = variables(formula)
    return BddManager(order).compile(formula)


def probability(bdd):
    return bdd.probability()


# ---- possible worlds ------------------------------------------------------

def _vector_eval(formula, columns, rows, memo):
    key = id(formula)
    if key in memo:
        return memo[key]
    if isinstance(formula, Const):
        value = np.full(rows, formula.value)
    elif isinstance(formula, Var):
        value = columns[formula.id]
    elif isinstance(formula, Not):
        value = ~_vector_eval(formula.operand, columns, rows, memo)
    elif isinstance(formula, And):
        value = np.logical_and.reduce([_vector_eval(f, columns, rows, memo) for f in formula.operands])
    else:
        value = np.logical_or.reduce([_vector_eval(f, columns, rows, memo) for f in formula.operands])
    memo[key] = value
    return value


def enumerate_worlds(formulas, max_vars=ENUMERATION_LIMIT):
    """Success probability of each formula by summing the weights of all worlds

    Worlds range over the union of the formulas' variables.
    """
    formulas = list(formulas)
    union = {}
    for formula in formulas:
        for var in variables(formula):
            union.setdefault(var.id, var)
    ordered = [union[k] for k in sorted(union)]
    if len(ordered) > max_vars:
        raise TooManyVars(len(ordered), max_vars)

    count = len(ordered)
    probs = np.array([v.prob for v in ordered], dtype=float)
    shifts = np.arange(count, dtype=np.int64)
    totals = np.zeros(len(formulas))
    chunk = 1 << _CHUNK_BITS

    for start in range(0, 1 << count, chunk):
        stop = min(start + chunk, 1 << count)
        rows = stop - start
        bits = ((np.arange(start, stop, dtype=np.int64)[:, None] >> shifts) & 1).astype(bool)
        weights = np.prod(np.where(bits, probs, 1.0 - probs), axis=1) if count else np.ones(rows)
        columns = {var.id: bits[:, i] for i, var in enumerate(ordered)}
        memo = {}
        for i, formula in enumerate(formulas):
            holds = _vector_eval(formula, columns, rows, memo)
            totals[i] += weights[holds].sum()
    return totals


def world_enumeration(formula, max_vars=ENUMERATION_LIMIT):
    """Definitional success probability over all 2^n worlds"""
    return float(enumerate_worlds([formula], max_vars)[0])
