"""Edge-level scoring against gold taxonomies and paired significance."""

from __future__ import annotations

from dataclasses import dataclass

from taxrefine.taxonomy import StructureReport, Taxonomy, structure_report

# chi-square critical value, 1 degree of freedom, p = 0.05
_CHI2_05 = 3.841


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    system_edges: int
    gold_edges: int
    correct_edges: int


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    statistic: float
    significant_at_05: bool


def edge_f1(system: Taxonomy, gold: Taxonomy) -> EvalReport:
    """Precision/recall/F1 over exact normalized (child, parent) matches."""
    if not gold.edges:
        raise ValueError("gold taxonomy has no edges")
    correct = len(system.edges & gold.edges)
    precision = correct / len(system.edges) if system.edges else 0.0
    recall = correct / len(gold.edges)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        system_edges=len(system.edges),
        gold_edges=len(gold.edges),
        correct_edges=correct,
    )


def structure_stats(t: Taxonomy, cycle_count_removed: int = 0) -> StructureReport:
    """Connectivity counts (orphans, components, edges)."""
    return structure_report(t, cycle_count_removed=cycle_count_removed)


def mcnemar(system_a: Taxonomy, system_b: Taxonomy, gold: Taxonomy) -> McNemarResult:
    """Continuity-corrected McNemar test on per-gold-edge correctness.

    b counts gold edges only system A recovers, c those only system B
    recovers; the statistic is (|b - c| - 1)^2 / (b + c), significant at
    the 0.05 level above 3.841.  b + c = 0 gives statistic 0.
    """
    b = 0
    c = 0
    for edge in gold.edges:
        in_a = edge in system_a.edges
        in_b = edge in system_b.edges
        if in_a and not in_b:
            b += 1
        elif in_b and not in_a:
            c += 1
    statistic = (abs(b - c) - 1) ** 2 / (b + c) if b + c > 0 else 0.0
    return McNemarResult(b=b, c=c, statistic=statistic, significant_at_05=statistic > _CHI2_05)


def report_text_lines(report: EvalReport) -> list[str]:
    return [
        f"system edges   {report.system_edges}",
        f"gold edges     {report.gold_edges}",
        f"correct edges  {report.correct_edges}",
        f"precision      {report.precision:.4f}",
        f"recall         {report.recall:.4f}",
        f"f1             {report.f1:.4f}",
    ]


def report_tsv_lines(report: EvalReport) -> list[str]:
    return [
        f"system_edges\t{report.system_edges}",
        f"gold_edges\t{report.gold_edges}",
        f"correct_edges\t{report.correct_edges}",
        f"precision\t{report.precision:.6f}",
        f"recall\t{report.recall:.6f}",
        f"f1\t{report.f1:.6f}",
    ]


def mcnemar_text_lines(result: McNemarResult) -> list[str]:
    verdict = "yes" if result.significant_at_05 else "no"
    return [
        f"only system A correct  {result.b}",
        f"only system B correct  {result.c}",
        f"mcnemar statistic      {result.statistic:.4f}",
        f"significant at 0.05    {verdict}",
    ]
