"""Conversion statistics: instance counts and average context lengths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from elqa.core import SPLIT_ORDER, TASK_ORDER, Document, QAInstance, Split, Task
from elqa.errors import ElqaError


@dataclass(frozen=True)
class StatRow:
    task: Task
    split: Split
    count: int
    avg_context_len: float  # words (context document tokens)


def conversion_stats(
    instances: Iterable[QAInstance], documents: Mapping[str, Document] | Iterable[Document]
) -> list[StatRow]:
    """Per (task, split): instance count and mean context length in words."""
    if not isinstance(documents, Mapping):
        documents = {d.doc_id: d for d in documents}
    groups: dict[tuple[Task, Split], list[int]] = {}
    for inst in instances:
        doc = documents.get(inst.context_doc_id)
        if doc is None:
            raise ElqaError(
                f"instance {inst.instance_id!r}: unresolved doc {inst.context_doc_id!r}"
            )
        groups.setdefault((inst.task, inst.split), []).append(len(doc))
    rows = []
    for (task, split), lengths in sorted(
        groups.items(), key=lambda kv: (TASK_ORDER[kv[0][0]], SPLIT_ORDER[kv[0][1]])
    ):
        rows.append(StatRow(task, split, len(lengths), sum(lengths) / len(lengths)))
    return rows


def render_stats(rows: list[StatRow]) -> str:
    if not rows:
        return "no instances\n"
    header = f"{'task':<18}{'split':<8}{'count':>8}{'ACL':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.task.value:<18}{row.split.value:<8}{row.count:>8}"
            f"{row.avg_context_len:>10.1f}"
        )
    return "\n".join(lines) + "\n"
