from typing import List

from pydantic import BaseModel, Field

HISTORY_COLUMNS = ["level", "outer", "total", "brinkman", "dissipated", "ginzburg_landau",
                   "volume_gap", "ell", "zeta", "seconds"]


class ObjectiveBreakdown(BaseModel):
    """Components of the augmented Lagrangian L = J + ell*W + zeta/2*W^2"""
    brinkman: float = Field(..., description="1/2 integral of alpha(phi)|u|^2")
    dissipated: float = Field(..., description="1/2 mu integral of |grad u|^2")
    ginzburg_landau: float = Field(..., description="gamma times the Ginzburg-Landau energy")
    multiplier_term: float = Field(..., description="ell * W(phi)")
    penalty_term: float = Field(..., description="zeta/2 * W(phi)^2")
    volume_gap: float = Field(..., description="W(phi) = integral of phi - beta|Omega|")

    @property
    def objective(self) -> float:
        """J^eps without the constraint terms"""
        return self.brinkman + self.dissipated + self.ginzburg_landau

    @property
    def total(self) -> float:
        return self.objective + self.multiplier_term + self.penalty_term

    @property
    def as_str(self) -> str:
        return (f"L = {self.total:.6g} | brinkman {self.brinkman:.6g} | "
                f"dissipated {self.dissipated:.6g} | gamma*P {self.ginzburg_landau:.6g} | "
                f"ell*W {self.multiplier_term:.6g} | zeta/2*W^2 {self.penalty_term:.6g} | "
                f"W {self.volume_gap:.3e}")


class HistoryRecord(BaseModel):
    """Objective parts and duals at one outer iteration"""
    level: int
    outer: int
    total: float
    brinkman: float
    dissipated: float
    ginzburg_landau: float
    volume_gap: float
    ell: float
    zeta: float
    seconds: float = 0.0

    @property
    def constraint_terms(self) -> float:
        return self.ell * self.volume_gap + 0.5 * self.zeta * self.volume_gap ** 2


class ConvergenceHistory(BaseModel):
    """Per-outer-iteration record of an optimization run"""
    records: List[HistoryRecord] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: HistoryRecord) -> None:
        self.records.append(record)

    def extend(self, records: List[HistoryRecord]) -> None:
        self.records.extend(records)

    def for_level(self, level: int) -> List[HistoryRecord]:
        return [r for r in self.records if r.level == level]

    @property
    def last(self) -> HistoryRecord:
        return self.records[-1]
