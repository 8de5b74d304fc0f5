"""
Pydantic schemas for scoring results.
"""

from typing import ClassVar

from pydantic import BaseModel, Field

from app.models import EVENT_NAMES


class ClassMetrics(BaseModel):
    """Metrics of one event class at patch resolution."""

    ap: float | None = Field(default=None, description="Average precision; None when no positives survive the mask")
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    specificity: float | None = None
    f1: float | None = None
    n_positive: int = Field(default=0, description="Masked-in positive patches")
    n_masked: int = Field(default=0, description="Masked-in patches")


class MetricsReport(BaseModel):
    """
    Scoring summary. Average precision is per class with the mean taken over the
    defined classes; threshold metrics are pooled over all classes, with the
    macro F1 (mean of per-class F1) reported alongside.
    """

    FLAT_KEYS: ClassVar[tuple[str, ...]] = (
        "ap_start_hesitation",
        "ap_turn",
        "ap_walking",
        "map",
        "accuracy",
        "precision",
        "recall",
        "specificity",
        "f1",
        "threshold",
        "n_masked",
    )

    ap_start_hesitation: float | None = None
    ap_turn: float | None = None
    ap_walking: float | None = None
    map: float | None = Field(default=None, description="Mean of the defined per-class APs")
    skipped_classes: int = Field(default=0, description="Classes with undefined AP")
    threshold: float = 0.5
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    specificity: float | None = None
    f1: float | None = None
    macro_f1: float | None = None
    n_masked: int = 0
    per_class: dict[str, ClassMetrics] = Field(default_factory=dict)

    @property
    def ap_per_class(self) -> tuple[float | None, float | None, float | None]:
        return (self.ap_start_hesitation, self.ap_turn, self.ap_walking)

    def to_flat(self) -> dict[str, float | int | None]:
        """Flat key-value form for CSV/JSON emission; extra keys follow the fixed ones."""
        flat: dict[str, float | int | None] = {key: getattr(self, key) for key in self.FLAT_KEYS}
        flat["macro_f1"] = self.macro_f1
        flat["skipped_classes"] = self.skipped_classes
        return flat

    def render_table(self) -> str:
        """Human-readable table: one row per class plus the pooled row."""

        def cell(value: float | None) -> str:
            return "   n/a" if value is None else f"{value:6.4f}"

        header = f"{'class':<18}{'AP':>8}{'acc':>8}{'prec':>8}{'recall':>8}{'spec':>8}{'F1':>8}"
        lines = [header, "-" * len(header)]
        for name in EVENT_NAMES:
            m = self.per_class.get(name, ClassMetrics())
            lines.append(
                f"{name:<18}  {cell(m.ap)}  {cell(m.accuracy)}  {cell(m.precision)}"
                f"  {cell(m.recall)}  {cell(m.specificity)}  {cell(m.f1)}"
            )
        lines.append("-" * len(header))
        lines.append(
            f"{'pooled':<18}  {cell(self.map)}  {cell(self.accuracy)}  {cell(self.precision)}"
            f"  {cell(self.recall)}  {cell(self.specificity)}  {cell(self.f1)}"
        )
        lines.append(
            f"mAP={cell(self.map).strip()}  macro-F1={cell(self.macro_f1).strip()}  threshold={self.threshold}  "
            f"masked patches={self.n_masked}  skipped classes={self.skipped_classes}"
        )
        return "\n".join(lines)
