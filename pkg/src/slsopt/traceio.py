"""Fixed-schema CSV serialization of iteration traces.

Columns: k,f_full,grad_full_norm,f_batch,g_batch_norm,d_norm,dTg,alpha0,alpha,
backtracks,sgr_pass,restarted. Floats use repr (shortest round-trip form), so
identical runs serialize to identical bytes and parsing recovers the exact
doubles; absent exact-oracle values serialize as empty fields; booleans as
true/false.
"""

from __future__ import annotations

from .errors import ConfigError
from .optimizer import IterationRecord

__all__ = ["CSV_HEADER", "trace_to_csv", "records_from_csv", "write_trace", "read_trace"]

CSV_HEADER = (
    "k,f_full,grad_full_norm,f_batch,g_batch_norm,d_norm,dTg,"
    "alpha0,alpha,backtracks,sgr_pass,restarted"
)


def _fmt_opt(v) -> str:
    return "" if v is None else repr(float(v))


def _fmt_bool(v) -> str:
    return "true" if v else "false"


def trace_to_csv(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.k),
                    _fmt_opt(r.f_full),
                    _fmt_opt(r.grad_full_norm),
                    repr(float(r.f_batch)),
                    repr(float(r.g_batch_norm)),
                    repr(float(r.d_norm)),
                    repr(float(r.dTg)),
                    repr(float(r.alpha0)),
                    repr(float(r.alpha)),
                    str(r.backtracks),
                    _fmt_bool(r.sgr_pass),
                    _fmt_bool(r.restarted),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _parse_opt(s: str):
    return None if s == "" else float(s)


def _parse_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigError(f"expected true/false, got {s!r}")


def records_from_csv(text: str) -> list[IterationRecord]:
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError("trace file does not start with the expected header")
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 12:
            raise ConfigError(f"trace row has {len(parts)} fields, expected 12: {ln!r}")
        records.append(
            IterationRecord(
                k=int(parts[0]),
                f_full=_parse_opt(parts[1]),
                grad_full_norm=_parse_opt(parts[2]),
                f_batch=float(parts[3]),
                g_batch_norm=float(parts[4]),
                d_norm=float(parts[5]),
                dTg=float(parts[6]),
                alpha0=float(parts[7]),
                alpha=float(parts[8]),
                backtracks=int(parts[9]),
                sgr_pass=_parse_bool(parts[10]),
                restarted=_parse_bool(parts[11]),
                batch_indices=[],
            )
        )
    return records


def write_trace(path, records):
    with open(path, "w", newline="\n") as fh:
        fh.write(trace_to_csv(records))


def read_trace(path) -> list[IterationRecord]:
    with open(path) as fh:
        return records_from_csv(fh.read())
