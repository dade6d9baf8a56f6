"""DRS data model and clause-format operations.

A DRS is a nested box structure: each box declares typed referents
(x entity, e event, t time, s state) and holds unary predicate, binary
role, and box-operator conditions. Boxes are linked either by embedding
under an operator (NOT, POS, NEC, IMP, DIS, DUP) or by labelled discourse
relations hosted at the top box.

Clause file format (UTF-8, LF, one clause per line, whitespace separated):

    % free-form comment (raw sentence text)
    % <tokenIndex> <predicateLabel> [head]      alignment record
    b1 CONTINUATION b2 b3                       discourse relation (host = top)
    b2 REF e1                                   referent declaration
    b2 sit_down.v.01 e1                         unary predicate (may carry sense)
    b2 Agent e1 "speaker"                       binary role; constants are quoted
    b2 NOT b4                                   operator condition

Token conventions: box ids match ``[bp][0-9]+`` ('p' marks a presupposed
box), variables match ``[xets][0-9]+``, operator and relation labels are
fully uppercase, roles are capitalized, predicates lowercase. Multiple
DRSs in one file are separated by blank lines.

All values are immutable; every operation returns a new structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Union

from .errors import (
    AmbiguousMerge,
    CyclicStructure,
    DataError,
    DuplicateReferent,
    EmptyInput,
    UnboundVariable,
    UnknownOperator,
)

VARIABLE_SORTS = ("x", "e", "t", "s")
UNARY_OPERATORS = frozenset({"NOT", "POS", "NEC"})
BINARY_OPERATORS = frozenset({"IMP", "DIS", "DUP"})
OPERATORS = UNARY_OPERATORS | BINARY_OPERATORS

_VAR_RE = re.compile(r"^([xets])([0-9]+)$")
_BOX_RE = re.compile(r"^([bp])([0-9]+)$")
_SENSE_RE = re.compile(r"^([^.]+)\.[a-z]+\.[0-9]+$")


def is_variable(token: str) -> bool:
    return _VAR_RE.match(token) is not None


def is_box_id(token: str) -> bool:
    return _BOX_RE.match(token) is not None


def is_constant(token: str) -> bool:
    return len(token) >= 2 and token.startswith('"') and token.endswith('"')


def variable_sort(name: str) -> str:
    m = _VAR_RE.match(name)
    if m is None:
        raise DataError(f"not a variable: {name!r}")
    return m.group(1)


def strip_sense(label: str) -> str:
    """Remove a trailing ``.pos.NN`` sense suffix; anything else is untouched."""
    m = _SENSE_RE.match(label)
    return m.group(1) if m else label


def has_sense(label: str) -> bool:
    return _SENSE_RE.match(label) is not None


@dataclass(frozen=True)
class Unary:
    predicate: str
    argument: str

    @property
    def args(self) -> tuple[str, ...]:
        return (self.argument,)


@dataclass(frozen=True)
class Binary:
    role: str
    first: str
    second: str

    @property
    def args(self) -> tuple[str, ...]:
        return (self.first, self.second)


@dataclass(frozen=True)
class Operator:
    op: str
    boxes: tuple[str, ...]

    @property
    def args(self) -> tuple[str, ...]:
        return ()


Condition = Union[Unary, Binary, Operator]


@dataclass(frozen=True)
class Box:
    id: str
    referents: tuple[str, ...] = ()
    conditions: tuple[Condition, ...] = ()
    presupposed: bool = False


@dataclass(frozen=True)
class Drs:
    boxes: tuple[Box, ...]
    relations: tuple[tuple[str, str, str], ...] = ()
    top: str = "b1"

    def box(self, box_id: str) -> Box:
        for b in self.boxes:
            if b.id == box_id:
                return b
        raise DataError(f"no box {box_id!r}")

    def box_ids(self) -> list[str]:
        return [b.id for b in self.boxes]


def operator_children(box: Box) -> list[str]:
    out = []
    for c in box.conditions:
        if isinstance(c, Operator):
            out.extend(c.boxes)
    return out


def parent_map(d: Drs) -> dict[str, str]:
    """Box-nesting parents: operator children and relation constituents.

    Each box has at most one structural parent (operator embedding is
    exclusive; relation constituents hang off the top box and may appear
    in several relations). Presupposed boxes are roots of their own until
    merged.
    """
    operator_embedded: dict[str, str] = {}
    for b in d.boxes:
        for child in operator_children(b):
            if child in operator_embedded:
                raise DataError(f"box {child} embedded under several operators")
            operator_embedded[child] = b.id
    parents = dict(operator_embedded)
    for _label, a, bb in d.relations:
        for child in (a, bb):
            if child in operator_embedded:
                raise DataError(
                    f"box {child} is both operator-embedded and a relation constituent")
            parents[child] = d.top
    return parents


def _ancestor_chain(box_id: str, parents: dict[str, str]) -> list[str]:
    chain = [box_id]
    seen = {box_id}
    cur = box_id
    while cur in parents:
        cur = parents[cur]
        if cur in seen:
            raise CyclicStructure(f"box {box_id} is its own ancestor")
        seen.add(cur)
        chain.append(cur)
    return chain


def accessible_boxes(d: Drs, box_id: str, parents: dict[str, str] | None = None) -> list[str]:
    """Boxes whose referents a condition in ``box_id`` may use.

    The box itself, its nesting ancestors, antecedent boxes of IMP/DUP
    operators on the chain, and all presupposed boxes (presuppositions
    project globally until merged).
    """
    if parents is None:
        parents = parent_map(d)
    chain = _ancestor_chain(box_id, parents)
    out = list(chain)
    chain_set = set(chain)
    for b in d.boxes:
        for c in b.conditions:
            if isinstance(c, Operator) and c.op in ("IMP", "DUP") and len(c.boxes) == 2:
                antecedent, consequent = c.boxes
                if consequent in chain_set and antecedent not in chain_set:
                    out.append(antecedent)
                    # referents of boxes nested inside the antecedent stay private
    for b in d.boxes:
        if b.presupposed and b.id not in chain_set and b.id not in out:
            out.append(b.id)
    return out


def validate(d: Drs) -> Drs:
    """Check every structural invariant; returns ``d`` unchanged on success."""
    ids = d.box_ids()
    if len(set(ids)) != len(ids):
        raise DataError("duplicate box ids")
    known = set(ids)
    if d.top not in known:
        raise DataError(f"top box {d.top!r} does not exist")
    declared: dict[str, str] = {}
    for b in d.boxes:
        if len(set(b.referents)) != len(b.referents):
            raise DuplicateReferent(f"duplicate referent in box {b.id}")
        for v in b.referents:
            if not is_variable(v):
                raise DataError(f"bad referent name {v!r} in box {b.id}")
            if v in declared:
                raise DuplicateReferent(f"referent {v} declared in {declared[v]} and {b.id}")
            declared[v] = b.id
        for c in b.conditions:
            if isinstance(c, Operator):
                if c.op not in OPERATORS:
                    raise UnknownOperator(f"unknown operator {c.op!r}")
                want = 1 if c.op in UNARY_OPERATORS else 2
                if len(c.boxes) != want:
                    raise DataError(f"operator {c.op} takes {want} box(es)")
                for ref in c.boxes:
                    if ref not in known:
                        raise DataError(f"operator references unknown box {ref!r}")
    for label, a, bb in d.relations:
        for ref in (a, bb):
            if ref not in known:
                raise DataError(f"relation {label} references unknown box {ref!r}")
        if d.top in (a, bb):
            raise DataError("discourse relations may not reference the top box")
    parents = parent_map(d)
    reachable = set()
    roots = [d.top] + [b.id for b in d.boxes if b.presupposed]
    stack = list(roots)
    children: dict[str, list[str]] = {}
    for child, par in parents.items():
        children.setdefault(par, []).append(child)
    while stack:
        cur = stack.pop()
        if cur in reachable:
            continue
        reachable.add(cur)
        stack.extend(children.get(cur, ()))
    if reachable != known:
        missing = sorted(known - reachable)
        raise DataError(f"boxes unreachable from top: {missing}")
    for b in d.boxes:
        _ancestor_chain(b.id, parents)  # raises CyclicStructure on cycles
        access = None
        for c in b.conditions:
            if isinstance(c, Operator):
                continue
            if isinstance(c, Unary) and is_constant(c.argument):
                raise DataError(f"unary predicate {c.predicate} takes a variable, "
                                f"got constant {c.argument}")
            for arg in c.args:
                if is_constant(arg):
                    continue
                if not is_variable(arg):
                    raise DataError(f"argument {arg!r} is neither a variable nor a quoted constant")
                if access is None:
                    access = {v for bid in accessible_boxes(d, b.id, parents)
                              for v in d.box(bid).referents}
                if arg not in access:
                    raise UnboundVariable(f"variable {arg} used in box {b.id} but not accessible")
    return d


# ---------------------------------------------------------------------------
# clause-file parsing and serialization


@dataclass(frozen=True)
class AlignmentRecord:
    token: int
    predicate: str
    head: bool = False


@dataclass(frozen=True)
class ClauseDocument:
    drs: Drs
    alignments: tuple[AlignmentRecord, ...] = ()
    comments: tuple[str, ...] = ()


_ALIGN_RE = re.compile(r"^%\s+(\d+)\s+(\S+)(\s+head)?\s*$")


def parse_clause_document(text: str) -> ClauseDocument:
    """Parse one clause block into a validated Drs plus alignment records."""
    lines = text.splitlines()
    alignments: list[AlignmentRecord] = []
    comments: list[str] = []
    clause_lines: list[list[str]] = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            m = _ALIGN_RE.match(line)
            if m:
                alignments.append(AlignmentRecord(
                    token=int(m.group(1)), predicate=m.group(2), head=bool(m.group(3))))
            else:
                comments.append(line[1:].strip())
            continue
        clause_lines.append(line.split())
    if not clause_lines:
        raise EmptyInput("no clause lines")

    order: list[str] = []
    referents: dict[str, list[str]] = {}
    conditions: dict[str, list[Condition]] = {}
    relations: list[tuple[str, str, str]] = []
    relation_hosts: list[str] = []

    def touch(box_id: str) -> None:
        if not is_box_id(box_id):
            raise DataError(f"bad box id {box_id!r}")
        if box_id not in order:
            order.append(box_id)
            referents[box_id] = []
            conditions[box_id] = []

    for toks in clause_lines:
        if len(toks) < 3:
            raise DataError(f"clause too short: {' '.join(toks)!r}")
        host = toks[0]
        touch(host)
        kw = toks[1]
        args = toks[2:]
        if kw == "REF":
            if len(args) != 1:
                raise DataError("REF takes one variable")
            if not is_variable(args[0]):
                raise DataError(f"bad referent name {args[0]!r}")
            referents[host].append(args[0])
        elif kw in OPERATORS:
            for a in args:
                touch(a)
            conditions[host].append(Operator(kw, tuple(args)))
        elif kw.isupper() and len(kw) > 1:
            if len(args) == 2 and is_box_id(args[0]) and is_box_id(args[1]):
                for a in args:
                    touch(a)
                relations.append((kw, args[0], args[1]))
                relation_hosts.append(host)
            else:
                raise UnknownOperator(f"unknown operator {kw!r}")
        elif len(args) == 1:
            conditions[host].append(Unary(kw, args[0]))
        elif len(args) == 2:
            conditions[host].append(Binary(kw, args[0], args[1]))
        else:
            raise DataError(f"predicate clause with {len(args)} arguments")

    top = order[0]
    for host in relation_hosts:
        if host != top:
            raise DataError(f"relation hosted at {host}, expected top box {top}")
    boxes = tuple(Box(id=b, referents=tuple(referents[b]), conditions=tuple(conditions[b]),
                      presupposed=b.startswith("p")) for b in order)
    d = Drs(boxes=boxes, relations=tuple(relations), top=top)
    return ClauseDocument(drs=validate(d), alignments=tuple(alignments),
                          comments=tuple(comments))


def parse_clauses(text: str) -> Drs:
    return parse_clause_document(text).drs


def parse_clause_documents(text: str) -> list[ClauseDocument]:
    """Parse a file holding several DRSs separated by blank lines."""
    blocks: list[list[str]] = [[]]
    for line in text.splitlines():
        if line.strip():
            blocks[-1].append(line)
        elif blocks[-1]:
            blocks.append([])
    docs = [parse_clause_document("\n".join(b)) for b in blocks if b]
    if not docs:
        raise EmptyInput("no clause blocks")
    return docs


def format_clauses(doc: ClauseDocument | Drs) -> str:
    """Canonical clause-file text; parse(format(d)) round-trips exactly."""
    if isinstance(doc, Drs):
        doc = ClauseDocument(drs=doc)
    d = doc.drs
    out: list[str] = []
    for c in doc.comments:
        out.append(f"% {c}")
    for rec in doc.alignments:
        out.append(f"% {rec.token} {rec.predicate}" + (" head" if rec.head else ""))
    for label, a, b in d.relations:
        out.append(f"{d.top} {label} {a} {b}")
    # top box first: the parser takes the first-mentioned box as top
    boxes = sorted(d.boxes, key=lambda b: b.id != d.top)
    for box in boxes:
        for v in box.referents:
            out.append(f"{box.id} REF {v}")
        for c in box.conditions:
            if isinstance(c, Unary):
                out.append(f"{box.id} {c.predicate} {c.argument}")
            elif isinstance(c, Binary):
                out.append(f"{box.id} {c.role} {c.first} {c.second}")
            else:
                out.append(f"{box.id} {c.op} {' '.join(c.boxes)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# presupposition merging, sense stripping, predicate reversion


def merge_presuppositions(d: Drs) -> Drs:
    """Dissolve presupposed boxes into the box that consumes their variables.

    A presupposed box with exactly one consumer (or whose consumers form an
    ancestor chain) merges into the consumer nearest the top; one that is
    structurally referenced or consumed by unrelated boxes raises
    AmbiguousMerge. Idempotent: a DRS with no presupposed boxes is returned
    as-is.
    """
    if not any(b.presupposed for b in d.boxes):
        return d
    current = d
    while True:
        pending = [b for b in current.boxes if b.presupposed]
        if not pending:
            break
        box = pending[0]
        if box.id == current.top:
            boxes = tuple(replace(b, presupposed=False) if b.id == box.id else b
                          for b in current.boxes)
            current = Drs(boxes=boxes, relations=current.relations, top=current.top)
            continue
        structurally_referenced = any(box.id in operator_children(b) for b in current.boxes)
        structurally_referenced |= any(box.id in (a, bb) for _l, a, bb in current.relations)
        if structurally_referenced:
            raise AmbiguousMerge(
                f"presupposed box {box.id} is referenced by an operator or relation")
        owned = set(box.referents)
        consumers = []
        for other in current.boxes:
            if other.id == box.id:
                continue
            used = {arg for c in other.conditions if not isinstance(c, Operator)
                    for arg in c.args if not is_constant(arg)}
            if used & owned:
                consumers.append(other.id)
        if not consumers:
            target = current.top
        elif len(consumers) == 1:
            target = consumers[0]
        else:
            parents = parent_map(current)
            chains = {c: set(_ancestor_chain(c, parents)) for c in consumers}
            target = None
            for c in consumers:
                if all(c in chains[other] for other in consumers):
                    target = c  # ancestor of every other consumer
            if target is None:
                raise AmbiguousMerge(
                    f"presupposed box {box.id} consumed by unrelated boxes {sorted(consumers)}")
        new_boxes = []
        for other in current.boxes:
            if other.id == box.id:
                continue
            if other.id == target:
                new_boxes.append(replace(
                    other,
                    referents=other.referents + box.referents,
                    conditions=other.conditions + box.conditions))
            else:
                new_boxes.append(other)
        current = Drs(boxes=tuple(new_boxes), relations=current.relations, top=current.top)
    try:
        return validate(current)
    except (UnboundVariable, DataError) as e:
        raise AmbiguousMerge(f"merging presupposed boxes broke accessibility: {e}") from e


def strip_senses(d: Drs) -> Drs:
    """Drop sense suffixes from unary predicate labels; idempotent."""
    boxes = []
    for b in d.boxes:
        conds = tuple(
            replace(c, predicate=strip_sense(c.predicate)) if isinstance(c, Unary) else c
            for c in b.conditions)
        boxes.append(replace(b, conditions=conds))
    return Drs(boxes=tuple(boxes), relations=d.relations, top=d.top)


def revert_predicates(d: Drs, annotation) -> tuple[Drs, int]:
    """Replace aligned lexical predicate labels with the aligned token lemma.

    A unary predicate is lexical when it carries a sense suffix or its
    (sense-stripped) label appears in the alignment records. If several
    tokens align to one predicate the head-marked token wins, leftmost on
    ties. Lexical predicates with no alignment keep their label; the count
    of such cases is returned alongside the new DRS.
    """
    by_pred: dict[str, list[AlignmentRecord]] = {}
    for rec in annotation.alignments:
        by_pred.setdefault(strip_sense(rec.predicate), []).append(rec)
    warnings = 0
    boxes = []
    for b in d.boxes:
        conds = []
        for c in b.conditions:
            if isinstance(c, Unary):
                stripped = strip_sense(c.predicate)
                lexical = has_sense(c.predicate) or stripped in by_pred
                if lexical:
                    recs = by_pred.get(stripped)
                    if recs:
                        heads = [r for r in recs if r.head]
                        chosen = min(heads or recs, key=lambda r: r.token)
                        lemma = annotation.lemmas[chosen.token]
                        conds.append(replace(c, predicate=lemma))
                        continue
                    warnings += 1
            conds.append(c)
        boxes.append(replace(b, conditions=tuple(conds)))
    return Drs(boxes=tuple(boxes), relations=d.relations, top=d.top), warnings


def canonicalize_variables(d: Drs) -> Drs:
    """Rename variables to first-use order per sort (x1, x2, ...) and boxes
    to b1, b2, ... in document order; the result is metric-equivalent."""
    box_map: dict[str, str] = {}
    for i, b in enumerate(d.boxes, start=1):
        box_map[b.id] = f"b{i}"
    var_map: dict[str, str] = {}
    counters = {s: 0 for s in VARIABLE_SORTS}

    def rename_var(v: str) -> str:
        if v not in var_map:
            s = variable_sort(v)
            counters[s] += 1
            var_map[v] = f"{s}{counters[s]}"
        return var_map[v]

    def rename_arg(a: str) -> str:
        return a if is_constant(a) else rename_var(a)

    boxes = []
    for b in d.boxes:
        refs = tuple(rename_var(v) for v in b.referents)
        conds: list[Condition] = []
        for c in b.conditions:
            if isinstance(c, Unary):
                conds.append(Unary(c.predicate, rename_arg(c.argument)))
            elif isinstance(c, Binary):
                conds.append(Binary(c.role, rename_arg(c.first), rename_arg(c.second)))
            else:
                conds.append(Operator(c.op, tuple(box_map[x] for x in c.boxes)))
        boxes.append(Box(id=box_map[b.id], referents=refs, conditions=tuple(conds),
                         presupposed=b.presupposed))
    relations = tuple((label, box_map[a], box_map[bb]) for label, a, bb in d.relations)
    return Drs(boxes=tuple(boxes), relations=relations, top=box_map[d.top])


def iter_unary_labels(d: Drs) -> Iterable[str]:
    for b in d.boxes:
        for c in b.conditions:
            if isinstance(c, Unary):
                yield c.predicate
