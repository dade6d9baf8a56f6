"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

from collections import Counter
from itertools import permutations, product

import numpy as np

from boxparse.drs import Binary, Box, Drs, Operator, Unary, validate

# Clause file for the running example: "I sat down and opened my laptop."
# Two event boxes joined by CONTINUATION under an empty top box.
FIG1_CLAUSES = """\
% I sat down and opened my laptop
% 1 sit_down head
% 2 sit_down
% 4 open head
% 6 laptop head
b1 CONTINUATION b2 b3
b2 REF e1
b2 sit_down.v.01 e1
b2 Agent e1 "speaker"
b3 REF e2
b3 REF x1
b3 open.v.01 e2
b3 laptop.n.01 x1
b3 Owner x1 "speaker"
b3 Agent e2 "speaker"
b3 Theme e2 x1
"""

FIG1_TOKENS = ["I", "sat", "down", "and", "opened", "my", "laptop"]
FIG1_LEMMAS = ["I", "sit", "down", "and", "open", "my", "laptop"]

UNARY_POOL = ["laptop", "open", "dog", "run", "sleep", "book", "see", "give",
              "time", "entity", "person"]
ROLE_POOL = ["Agent", "Theme", "Owner", "Patient"]
CONSTANT_POOL = ['"speaker"', '"hearer"', '"now"']
RELATION_POOL = ["CONTINUATION", "CONTRAST", "NARRATION", "RESULT"]
SORT_POOL = ["x", "e", "t", "s"]


class _DrsSampler:
    def __init__(self, rng: np.random.Generator, max_boxes: int, max_conditions: int):
        self.rng = rng
        self.max_boxes = max_boxes
        self.max_conditions = max_conditions
        self.n_boxes = 0
        self.n_conditions = 0
        self.var_counter = 0
        self.boxes: list[Box] = []

    def pick(self, pool):
        return pool[int(self.rng.integers(len(pool)))]

    def fresh_var(self) -> str:
        self.var_counter += 1
        return f"{self.pick(SORT_POOL)}{self.var_counter}"

    def build_box(self, accessible: list[str], depth: int) -> str:
        self.n_boxes += 1
        box_id = f"b{self.n_boxes}"
        refs = []
        for _ in range(int(self.rng.integers(0, 3))):
            refs.append(self.fresh_var())
        scope = accessible + refs
        conds: list = []
        budget = self.max_conditions - self.n_conditions
        for _ in range(int(self.rng.integers(0, min(4, budget) + 1))):
            kind = self.rng.random()
            if kind < 0.5:
                if not scope:
                    v = self.fresh_var()
                    refs.append(v)
                    scope.append(v)
                conds.append(Unary(self.pick(UNARY_POOL), self.pick(scope)))
                self.n_conditions += 1
            elif kind < 0.85:
                if not scope:
                    v = self.fresh_var()
                    refs.append(v)
                    scope.append(v)
                a1 = self.pick(scope)
                a2 = self.pick(scope + CONSTANT_POOL)
                conds.append(Binary(self.pick(ROLE_POOL), a1, a2))
                self.n_conditions += 1
            elif depth < 2 and self.n_boxes < self.max_boxes:
                op = self.pick(["NOT", "POS", "NEC", "IMP", "DIS", "DUP"])
                if op in ("NOT", "POS", "NEC"):
                    child = self.build_box(scope, depth + 1)
                    conds.append(Operator(op, (child,)))
                elif self.n_boxes + 1 < self.max_boxes:
                    first = self.build_box(scope, depth + 1)
                    second_scope = scope + (list(self._box(first).referents)
                                            if op in ("IMP", "DUP") else [])
                    second = self.build_box(second_scope, depth + 1)
                    conds.append(Operator(op, (first, second)))
                self.n_conditions += 1
        self.boxes.append(Box(id=box_id, referents=tuple(refs), conditions=tuple(conds)))
        return box_id

    def _box(self, box_id: str) -> Box:
        return next(b for b in self.boxes if b.id == box_id)


def random_drs(rng: np.random.Generator, max_boxes: int = 4,
               max_conditions: int = 12, allow_relations: bool = True) -> Drs:
    """Random valid DRS built scope-correct by construction.

    Normalized through the clause-text format so box order matches what
    parsing the serialized form yields.
    """
    from boxparse.drs import format_clauses, parse_clauses

    while True:
        sampler = _DrsSampler(rng, max_boxes, max_conditions)
        use_relations = allow_relations and max_boxes >= 3 and rng.random() < 0.4
        if use_relations:
            top = sampler.build_box([], depth=1)
            top_scope = list(sampler._box(top).referents)
            n_constituents = 2 if max_boxes < 4 or rng.random() < 0.7 else 3
            constituents = [sampler.build_box(top_scope, depth=1)
                            for _ in range(n_constituents)]
            relations = [(sampler.pick(RELATION_POOL), constituents[0], constituents[1])]
            if n_constituents == 3:
                relations.append((sampler.pick(RELATION_POOL), constituents[1],
                                  constituents[2]))
            d = Drs(boxes=tuple(sampler.boxes), relations=tuple(relations), top=top)
        else:
            top = sampler.build_box([], depth=0)
            d = Drs(boxes=tuple(sampler.boxes), relations=(), top=top)
        if not format_clauses(d).strip():
            continue  # single empty box; not representable as clause text
        return parse_clauses(format_clauses(validate(d)))


def small_drs_for_alignment(rng: np.random.Generator) -> Drs:
    """Valid DRS with at most 6 alignable symbols (variables + boxes)."""
    while True:
        d = random_drs(rng, max_boxes=2, max_conditions=4, allow_relations=False)
        n_symbols = len(d.boxes) + sum(len(b.referents) for b in d.boxes)
        if n_symbols <= 6:
            return d


# --- independent alignment oracle -----------------------------------------

def _rename(clause: tuple, sorts: dict, mapping: dict) -> tuple:
    return tuple(mapping.get(t, ("unmapped", t)) if t in sorts else t for t in clause)


def oracle_match_count(pred_clauses, pred_sorts, gold_clauses, mapping) -> int:
    gold_counts = Counter(gold_clauses)
    renamed = Counter(_rename(c, pred_sorts, mapping) for c in pred_clauses)
    return sum(min(n, gold_counts[c]) for c, n in renamed.items() if c in gold_counts)


def brute_force_best_match(pred_clauses, pred_sorts, gold_clauses, gold_sorts) -> int:
    """Exhaustive search over every injective sort-respecting symbol map."""
    sorts = sorted(set(pred_sorts.values()) | set(gold_sorts.values()))
    per_sort_choices = []
    for s in sorts:
        ps = sorted(k for k, v in pred_sorts.items() if v == s)
        gs = sorted(k for k, v in gold_sorts.items() if v == s)
        choices = []
        if len(ps) <= len(gs):
            for perm in permutations(gs, len(ps)):
                choices.append(dict(zip(ps, perm)))
        else:
            for sel in permutations(ps, len(gs)):
                choices.append(dict(zip(sel, gs)))
        per_sort_choices.append(choices or [{}])
    best = 0
    for combo in product(*per_sort_choices):
        mapping = {}
        for m in combo:
            mapping.update(m)
        best = max(best, oracle_match_count(pred_clauses, pred_sorts, gold_clauses, mapping))
    return best
