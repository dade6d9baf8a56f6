"""Clause-matching evaluation with best-alignment search.

A DRS decomposes into a multiset of clauses; predicted and gold variables
and box ids are alignment-subject symbols while labels and constants are
fixed. The score searches for the injective, sort-respecting symbol map
that maximizes matched clauses (hill-climbing with a greedy start and
random restarts), then reports precision, recall and F1, plus a
four-way category breakdown under the fixed best alignment.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .drs import Binary, Drs, Operator, Unary, variable_sort
from .errors import DataError

Clause = tuple

CATEGORIES = ("operators", "non_lexical_unary", "non_lexical_binary", "lexical")


@dataclass(frozen=True)
class ClauseSet:
    clauses: tuple[Clause, ...]
    sorts: "dict[str, str]"  # alignment-subject symbol -> sort (x/e/t/s/b)

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class Alignment:
    mapping: "dict[str, str]"  # predicted symbol -> gold symbol, injective

    def __post_init__(self):
        values = list(self.mapping.values())
        if len(set(values)) != len(values):
            raise DataError("alignment must be injective")


@dataclass
class ScoreReport:
    matched: int
    n_predicted: int
    n_gold: int
    per_category: "dict[str, ScoreReport]" = field(default_factory=dict)

    @property
    def precision(self) -> float:
        if self.n_predicted == 0:
            return 1.0 if self.n_gold == 0 else 0.0
        return self.matched / self.n_predicted

    @property
    def recall(self) -> float:
        if self.n_gold == 0:
            return 1.0 if self.n_predicted == 0 else 0.0
        return self.matched / self.n_gold

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0.0:
            return 0.0
        return 2.0 * p * r / (p + r)


def to_clauses(d: Drs) -> ClauseSet:
    """Deterministic clause decomposition: one clause per referent,
    condition and discourse relation."""
    clauses: list[Clause] = []
    sorts: dict[str, str] = {}
    for b in d.boxes:
        sorts[b.id] = "b"
        for v in b.referents:
            sorts[v] = variable_sort(v)
            clauses.append((b.id, "REF", v))
        for c in b.conditions:
            if isinstance(c, Unary):
                clauses.append((b.id, c.predicate, c.argument))
            elif isinstance(c, Binary):
                clauses.append((b.id, c.role, c.first, c.second))
            else:
                clauses.append((b.id, c.op) + c.boxes)
    for label, a, bb in d.relations:
        clauses.append(("REL", label, a, bb))
    return ClauseSet(clauses=tuple(clauses), sorts=sorts)


def rename_clause(clause: Clause, sorts: dict[str, str], mapping: dict[str, str]) -> Clause:
    """Apply a (possibly partial) symbol map; unmapped symbols become
    placeholders that can never match a gold token."""
    out = []
    for tok in clause:
        if tok in sorts:
            out.append(mapping.get(tok, ("?", tok)))
        else:
            out.append(tok)
    return tuple(out)


def count_matches(pred: ClauseSet, gold: ClauseSet, mapping: dict[str, str]) -> int:
    gold_counts = Counter(gold.clauses)
    return _count_against(pred, gold_counts, mapping)


def _count_against(pred: ClauseSet, gold_counts: Counter, mapping: dict[str, str]) -> int:
    renamed = Counter(rename_clause(c, pred.sorts, mapping) for c in pred.clauses)
    return sum(min(n, gold_counts[c]) for c, n in renamed.items() if c in gold_counts)


def _clause_signature(clause: Clause, sorts: dict[str, str]) -> tuple:
    return tuple(("SYM", sorts[tok]) if tok in sorts else tok for tok in clause)


def _smart_init(pred: ClauseSet, gold: ClauseSet) -> dict[str, str]:
    """Greedy seed: vote for symbol pairs implied by clauses whose fixed
    parts already agree."""
    gold_by_sig: dict[tuple, list[Clause]] = {}
    for c in gold.clauses:
        gold_by_sig.setdefault(_clause_signature(c, gold.sorts), []).append(c)
    votes: Counter = Counter()
    for pc in pred.clauses:
        sig = _clause_signature(pc, pred.sorts)
        for gc in gold_by_sig.get(sig, ()):
            for ptok, gtok in zip(pc, gc):
                if ptok in pred.sorts:
                    votes[(ptok, gtok)] += 1
    mapping: dict[str, str] = {}
    used_gold: set[str] = set()
    for (p, g), _n in sorted(votes.items(), key=lambda kv: (-kv[1], kv[0])):
        if p not in mapping and g not in used_gold and pred.sorts[p] == gold.sorts[g]:
            mapping[p] = g
            used_gold.add(g)
    return mapping


def _random_init(pred: ClauseSet, gold: ClauseSet, rng: np.random.Generator) -> dict[str, str]:
    mapping: dict[str, str] = {}
    pred_by_sort: dict[str, list[str]] = {}
    gold_by_sort: dict[str, list[str]] = {}
    for s, sort in sorted(pred.sorts.items()):
        pred_by_sort.setdefault(sort, []).append(s)
    for s, sort in sorted(gold.sorts.items()):
        gold_by_sort.setdefault(sort, []).append(s)
    for sort, psyms in pred_by_sort.items():
        gsyms = list(gold_by_sort.get(sort, ()))
        rng.shuffle(gsyms)
        for p, g in zip(psyms, gsyms):
            mapping[p] = g
    return mapping


def _climb(pred: ClauseSet, gold_counts: Counter, gold: ClauseSet,
           mapping: dict[str, str], max_iters: int) -> tuple[dict[str, str], int]:
    """Steepest-ascent: apply the single reassignment or swap with the
    largest gain until a local optimum."""
    current = dict(mapping)
    score = _count_against(pred, gold_counts, current)
    psyms = sorted(pred.sorts)
    gold_by_sort: dict[str, list[str]] = {}
    for s, sort in sorted(gold.sorts.items()):
        gold_by_sort.setdefault(sort, []).append(s)
    for _ in range(max_iters):
        best_gain = 0
        best_map = None
        for p in psyms:
            sort = pred.sorts[p]
            used = set(current.values()) - {current.get(p)}
            # reassign p to a free gold symbol, or unmap it
            options = [g for g in gold_by_sort.get(sort, ()) if g not in used]
            for g in options + [None]:
                if current.get(p) == g:
                    continue
                cand = dict(current)
                if g is None:
                    cand.pop(p, None)
                else:
                    cand[p] = g
                gain = _count_against(pred, gold_counts, cand) - score
                if gain > best_gain:
                    best_gain, best_map = gain, cand
            # swap images with another predicted symbol of the same sort
            for q in psyms:
                if q <= p or pred.sorts[q] != sort:
                    continue
                pg, qg = current.get(p), current.get(q)
                if pg == qg:
                    continue
                cand = dict(current)
                if qg is None:
                    cand.pop(p, None)
                else:
                    cand[p] = qg
                if pg is None:
                    cand.pop(q, None)
                else:
                    cand[q] = pg
                gain = _count_against(pred, gold_counts, cand) - score
                if gain > best_gain:
                    best_gain, best_map = gain, cand
        if best_map is None:
            break
        current = best_map
        score += best_gain
    return current, score


def best_alignment(pred: ClauseSet, gold: ClauseSet, restarts: int = 20,
                   max_iters: int = 1000, seed: int = 0) -> tuple[Alignment, int]:
    """Search for the symbol alignment maximizing matched clauses.

    The returned count is a lower bound on the true optimum; on small
    symbol sets the greedy start plus random restarts reach it.
    """
    gold_counts = Counter(gold.clauses)
    rng = np.random.default_rng(seed)
    best_map = _smart_init(pred, gold)
    best_map, best_score = _climb(pred, gold_counts, gold, best_map, max_iters)
    for _ in range(max(0, restarts - 1)):
        start = _random_init(pred, gold, rng)
        mapping, score = _climb(pred, gold_counts, gold, start, max_iters)
        if score > best_score:
            best_map, best_score = mapping, score
    return Alignment(mapping=best_map), best_score


def score(pred: Drs, gold: Drs, restarts: int = 20, max_iters: int = 1000,
          seed: int = 0, lexical_labels: frozenset[str] | None = None) -> ScoreReport:
    pred_cs = to_clauses(pred)
    gold_cs = to_clauses(gold)
    alignment, matched = best_alignment(pred_cs, gold_cs, restarts, max_iters, seed)
    report = ScoreReport(matched=matched, n_predicted=len(pred_cs), n_gold=len(gold_cs))
    if lexical_labels is not None:
        report.per_category = category_breakdown(pred_cs, gold_cs, alignment, lexical_labels)
    return report


def micro_average(reports: list[ScoreReport]) -> ScoreReport:
    """Corpus-level score: summed counts, not averaged ratios."""
    total = ScoreReport(matched=sum(r.matched for r in reports),
                        n_predicted=sum(r.n_predicted for r in reports),
                        n_gold=sum(r.n_gold for r in reports))
    cats = {c for r in reports for c in r.per_category}
    for c in sorted(cats):
        subs = [r.per_category[c] for r in reports if c in r.per_category]
        total.per_category[c] = ScoreReport(
            matched=sum(s.matched for s in subs),
            n_predicted=sum(s.n_predicted for s in subs),
            n_gold=sum(s.n_gold for s in subs))
    return total


def categorize_clause(clause: Clause, sorts: dict[str, str],
                      lexical_labels: frozenset[str]) -> str:
    """Bucket for the error analysis: logic operators and discourse
    relations / non-lexical unary (incl. referent declarations) /
    non-lexical binary roles / lexical predicates."""
    if clause[0] == "REL":
        return "operators"
    if len(clause) >= 3 and clause[1] in ("NOT", "POS", "NEC", "IMP", "DIS", "DUP") \
            and all(tok in sorts and sorts[tok] == "b" for tok in clause[2:]):
        return "operators"
    if clause[1] == "REF":
        return "non_lexical_unary"
    if len(clause) == 4:
        return "non_lexical_binary"
    return "lexical" if clause[1] in lexical_labels else "non_lexical_unary"


def category_breakdown(pred: ClauseSet, gold: ClauseSet, alignment: Alignment,
                       lexical_labels: frozenset[str]) -> dict[str, ScoreReport]:
    """Per-category scores under one alignment fixed on the full clause sets."""
    out: dict[str, ScoreReport] = {}
    for cat in CATEGORIES:
        pred_sub = [c for c in pred.clauses
                    if categorize_clause(c, pred.sorts, lexical_labels) == cat]
        gold_sub = [c for c in gold.clauses
                    if categorize_clause(c, gold.sorts, lexical_labels) == cat]
        gold_counts = Counter(gold_sub)
        renamed = Counter(rename_clause(c, pred.sorts, alignment.mapping) for c in pred_sub)
        matched = sum(min(n, gold_counts[c]) for c, n in renamed.items() if c in gold_counts)
        out[cat] = ScoreReport(matched=matched, n_predicted=len(pred_sub),
                               n_gold=len(gold_sub))
    return out
