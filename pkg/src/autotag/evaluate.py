"""Per-keyword precision/recall and the F-measure over a test set.

A keyword enters the means when it is predicted at least once or
present in the ground truth at least once; a keyword that never occurs
on either side says nothing about the run and is excluded. Division by
zero resolves to 0 on the affected side.
"""

import csv
from dataclasses import dataclass

from .errors import DataError


@dataclass
class KeywordStats:
    keyword: str
    predicted: int
    relevant: int
    correct: int
    precision: float
    recall: float
    included: bool


@dataclass
class EvalReport:
    per_keyword: list
    mean_precision: float
    mean_recall: float
    f_measure: float


def f_measure(p, r):
    """Harmonic mean 2pr/(p+r); 0 when both rates are 0."""
    if p == 0.0 and r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def evaluate(predictions, dataset):
    """Score a map of image id -> predicted keyword indices against a
    dataset's annotations."""
    vocab = dataset.vocabulary
    m = len(vocab)
    known = {rec.id: rec for rec in dataset.records}

    predicted = [0] * m
    correct = [0] * m
    relevant = [0] * m

    for rec in dataset.records:
        for j in rec.tag_indices:
            relevant[j] += 1

    for image_id, tags in predictions.items():
        rec = known.get(image_id)
        if rec is None:
            raise DataError(f"prediction for unknown image id {image_id!r}")
        seen = set()
        for j in tags:
            if not 0 <= j < m:
                raise DataError(
                    f"tag index {j} out of range for {image_id!r}")
            if j in seen:
                continue
            seen.add(j)
            predicted[j] += 1
            if j in rec.tag_indices:
                correct[j] += 1

    stats = []
    included_p = []
    included_r = []
    for j in range(m):
        inc = predicted[j] > 0 or relevant[j] > 0
        prec = correct[j] / predicted[j] if predicted[j] > 0 else 0.0
        rec_ = correct[j] / relevant[j] if relevant[j] > 0 else 0.0
        stats.append(KeywordStats(
            keyword=vocab.word(j), predicted=predicted[j],
            relevant=relevant[j], correct=correct[j],
            precision=prec, recall=rec_, included=inc))
        if inc:
            included_p.append(prec)
            included_r.append(rec_)

    if not included_p:
        raise DataError("nothing to evaluate: no predictions and no truth")
    mean_p = sum(included_p) / len(included_p)
    mean_r = sum(included_r) / len(included_r)
    return EvalReport(per_keyword=stats, mean_precision=mean_p,
                      mean_recall=mean_r, f_measure=f_measure(mean_p, mean_r))


def write_report_csv(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["keyword", "predicted", "relevant", "correct",
                         "precision", "recall", "included"])
        for st in report.per_keyword:
            writer.writerow([st.keyword, st.predicted, st.relevant, st.correct,
                             f"{st.precision:.6f}", f"{st.recall:.6f}",
                             int(st.included)])
        writer.writerow(["__summary__", "", "", "",
                         f"{report.mean_precision:.6f}",
                         f"{report.mean_recall:.6f}",
                         f"{report.f_measure:.6f}"])


def format_table(report, model_name="this run"):
    """Comparison-style summary row: model, mean precision, mean
    recall, f-measure."""
    header = f"{'model':<16}{'precision':>12}{'recall':>12}{'f-measure':>12}"
    row = (f"{model_name:<16}{report.mean_precision:>12.4f}"
           f"{report.mean_recall:>12.4f}{report.f_measure:>12.4f}")
    return header + "\n" + row
