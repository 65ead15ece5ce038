"""Comparison and ablation table rendering.

Tables have methods as rows and the six metrics as columns; a trailing
row carries the relative improvement of the first row over the second,
rounded half-up to one decimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP

from .canonical import canonical_json_bytes

COLUMN_ORDER = ("Arc-Sim", "OC", "AQ", "IQ", "MS", "DD")
FIELD_BY_COLUMN = {
    "Arc-Sim": "arc_sim",
    "OC": "oc",
    "AQ": "aq",
    "IQ": "iq",
    "MS": "ms",
    "DD": "dd",
}
MISSING = "—"  # em dash renders gaps in the table

TABLE_SCHEMA = "table/1"


def round_half_up(value: float, decimals: int = 1) -> float:
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def improvement_percent(ours: float | None, baseline: float | None) -> float | None:
    """(ours - baseline) / baseline * 100, rounded half-up to one decimal."""
    if ours is None or baseline is None or baseline == 0:
        return None
    return round_half_up((ours - baseline) / baseline * 100.0)


@dataclass
class ComparisonTable:
    rows: list[tuple[str, dict]]
    footnotes: list[str] = field(default_factory=list)
    improvement_label: str = "improvement"

    @property
    def improvement(self) -> dict[str, float | None] | None:
        """First row relative to second, per metric; needs exactly two rows."""
        if len(self.rows) != 2:
            return None
        ours, baseline = self.rows[0][1], self.rows[1][1]
        return {
            f: improvement_percent(ours.get(f), baseline.get(f))
            for f in FIELD_BY_COLUMN.values()
        }


def _format_value(value: float | None) -> str:
    return MISSING if value is None else f"{value:.3f}"


def _format_improvement(value: float | None) -> str:
    return MISSING if value is None else f"{value:+.1f}%"


def render_text(table: ComparisonTable) -> str:
    label_width = max(
        [len("method"), len(table.improvement_label)]
        + [len(label) for label, _ in table.rows]
    )
    col_width = max(max(len(c) for c in COLUMN_ORDER), 8)

    def line(label: str, cells: list[str]) -> str:
        return (label.ljust(label_width)
                + "".join("  " + cell.rjust(col_width) for cell in cells)).rstrip()

    lines = [line("method", list(COLUMN_ORDER))]
    lines.append("-" * label_width + "".join("  " + "-" * col_width for _ in COLUMN_ORDER))
    for label, aggregate in table.rows:
        cells = [_format_value(aggregate.get(FIELD_BY_COLUMN[c])) for c in COLUMN_ORDER]
        lines.append(line(label, cells))
    improvement = table.improvement
    if improvement is not None:
        cells = [_format_improvement(improvement[FIELD_BY_COLUMN[c]]) for c in COLUMN_ORDER]
        lines.append(line(table.improvement_label, cells))
    for note in table.footnotes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def render_structured(table: ComparisonTable) -> dict:
    """Same numbers as the text rendering, three decimals for values."""
    rows = []
    for label, aggregate in table.rows:
        values = {}
        for column in COLUMN_ORDER:
            f = FIELD_BY_COLUMN[column]
            value = aggregate.get(f)
            values[f] = None if value is None else round_half_up(value, 3)
        rows.append({"label": label, "values": values})
    improvement = table.improvement
    return {
        "schema": TABLE_SCHEMA,
        "columns": list(COLUMN_ORDER),
        "rows": rows,
        "improvement_percent": improvement,
        "footnotes": list(table.footnotes),
    }


def structured_bytes(table: ComparisonTable) -> bytes:
    return canonical_json_bytes(render_structured(table))
