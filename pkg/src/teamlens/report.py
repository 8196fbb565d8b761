"""Canonical report serialization and DOT graph export."""
from __future__ import annotations

import json
import math
import os
import tempfile
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import IO, Any

from teamlens.graph import SocialNetwork

SCHEMA_VERSION = 1
SIGNIFICANT_DIGITS = 12


class ReportError(OSError):
    pass


def render_number(x: float | Fraction) -> float:
    """Round to 12 significant digits; the shortest repr of the result is what gets written."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x} in report")
    r = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if r == 0 else r  # no "-0.0"


def canonical(obj: Any) -> Any:
    """Plain JSON data with rationals rendered at fixed precision."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (float, Fraction)):
        return render_number(obj)
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return canonical(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@lru_cache(maxsize=None)
def report_schema() -> dict:
    text = resources.files("teamlens").joinpath("report_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, report_schema())


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise ReportError(f"cannot write {path}: {exc.strerror}") from None


def _write(text: str, sink: str | os.PathLike | IO[str] | None) -> str:
    if sink is None:
        return text
    if isinstance(sink, (str, os.PathLike)):
        write_text_atomic(sink, text)
    else:
        try:
            sink.write(text)
        except (OSError, ValueError) as exc:
            raise ReportError(f"cannot write report: {exc}") from None
    return text


def emit_report(report: dict, sink: str | os.PathLike | IO[str] | None = None) -> str:
    """Serialize a sprint report canonically; optionally write it to ``sink``."""
    return _write(dumps(report), sink)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _fmt_weight(w: Fraction) -> str:
    return repr(render_number(w)) if Fraction(w).denominator != 1 else str(int(w))


def export_graph(
    net: SocialNetwork,
    sink: str | os.PathLike | IO[str] | None = None,
    name: str = "team",
) -> str:
    """DOT text for ``net``: nodes in roster order, then edges with a weight attribute."""
    kind, arrow = ("digraph", "->") if net.directed else ("graph", "--")
    lines = [f"{kind} {_quote(name)} {{"]
    for v in net.nodes:
        lines.append(f"  {_quote(v)};")
    for (u, v), w in net.edges.items():
        lines.append(f"  {_quote(u)} {arrow} {_quote(v)} [weight={_fmt_weight(w)}];")
    lines.append("}")
    return _write("\n".join(lines) + "\n", sink)
