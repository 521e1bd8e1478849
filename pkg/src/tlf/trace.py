"""Per-iteration convergence records and their stable CSV serialization.

Known method tags: pg, apg, mapg, tlf, dtlf (produced here), plus niapg and
apgnc which are reserved for traces imported from external runs.
"""

import io
from dataclasses import dataclass, field

METHOD_TAGS = ("pg", "apg", "mapg", "tlf", "dtlf", "niapg", "apgnc")

CSV_HEADER = "k,F,rel_err,norm_xF_x,norm_xG_x,norm_xGmu_x,alpha,mu,mdus_branch,bus_branch,psnr"

MDUS_ACCEPTED = "accepted-v"
MDUS_FALLBACK = "fell-back-xF"
BUS_ACCEPTED = "accepted-z"
BUS_FALLBACK = "fell-back-xG"
BUS_NA = "not-applicable"


@dataclass
class TraceRecord:
    k: int
    F_value: float
    rel_err: float
    norm_xF_x: float
    norm_xG_x: float | None = None
    norm_xGmu_x: float | None = None
    alpha: float | None = None
    mu: float | None = None
    mdus_branch: str | None = None
    bus_branch: str | None = None
    psnr: float | None = None


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


@dataclass
class IterateTrace:
    """Ordered per-iteration records for one solve."""

    method: str
    initial_F: float = 0.0
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def F_values(self):
        return [r.F_value for r in self.records]

    def final(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.records:
            buf.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        r.k,
                        r.F_value,
                        r.rel_err,
                        r.norm_xF_x,
                        r.norm_xG_x,
                        r.norm_xGmu_x,
                        r.alpha,
                        r.mu,
                        r.mdus_branch,
                        r.bus_branch,
                        r.psnr,
                    )
                )
                + "\n"
            )
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())
