"""Per-iteration records and the history CSV."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..mesh import atomic_write_text

THRESHOLDS = (1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4)
CSV_HEADER = "iter,cost,rel_grad_norm,step,state_solves,adjoint_solves"
STATUSES = ("Converged", "MaxIterations", "LineSearchFailed", "SolverFailure")


@dataclass
class IterationRecord:
    k: int
    cost: float
    rel_grad_norm: float
    step: float = math.nan          # accepted t; NaN on the final record
    state_solves: int = 0           # cumulative
    adjoint_solves: int = 0         # cumulative
    grad_norm_sq: float = math.nan
    slope: float = math.nan         # a(G_k, D_k) of the executed direction
    candidate_slope: float = math.nan   # a(G_k, D_k) before any descent reset
    curvature: float = math.nan     # a(s, y) of the L-BFGS pair offered at this iterate
    beta: float = math.nan
    restarted: bool = False
    descent_reset: bool = False
    guarded: bool = False
    memory_size: int = 0
    memory_reset: bool = False
    trials: int = 0
    rejected_meshes: int = 0
    next_cost: float = math.nan     # J after the accepted step


@dataclass
class OptHistory:
    method: str
    records: list[IterationRecord] = field(default_factory=list)
    status: str | None = None
    message: str = ""

    @property
    def iterations(self) -> int:
        """Accepted steps."""
        return sum(1 for r in self.records if not math.isnan(r.step))

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def state_solves(self) -> int:
        return self.records[-1].state_solves if self.records else 0

    @property
    def adjoint_solves(self) -> int:
        return self.records[-1].adjoint_solves if self.records else 0

    def iterations_to(self, threshold: float) -> int | None:
        for r in self.records:
            if r.rel_grad_norm <= threshold:
                return r.k
        return None

    def threshold_row(self, thresholds=THRESHOLDS) -> list[int | None]:
        return [self.iterations_to(t) for t in thresholds]

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.records:
            step = "" if math.isnan(r.step) else repr(r.step)
            lines.append(f"{r.k},{r.cost!r},{r.rel_grad_norm!r},{step},{r.state_solves},{r.adjoint_solves}")
        lines.append(f"# status={self.status}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def read_history_csv(path) -> tuple[list[dict], str | None]:
    rows, status = [], None
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            line = line.strip()
            if line.startswith("# status="):
                status = line.split("=", 1)[1]
            elif line:
                vals = line.split(",")
                rows.append({h: (float(v) if v else math.nan) for h, v in zip(header, vals)})
    return rows, status
