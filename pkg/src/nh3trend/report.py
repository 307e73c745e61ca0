"""Assemble trend-accounting results and render them as JSON, text or CSV.

Output is deterministic: keys are sorted and every float is rounded to six
significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from itertools import combinations
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .compare import (
    SIG_CELLS,
    SIGN_CELLS,
    TrendRecord,
    conditional_breakdown,
    delta_table,
    pairwise_agreement,
    significance_drop_report,
    trend_census,
)
from .errors import EmptyInput

DATASET_ORDER = ("raw", "calibrated", "calibrated_imputed", "reference")
SCHEMA_VERSION = 1


def _cell(key: tuple[str, str]) -> str:
    return key[0] + key[1]


def _ordered(labels) -> list[str]:
    rank = {name: i for i, name in enumerate(DATASET_ORDER)}
    return sorted(labels, key=lambda s: (rank.get(s, len(rank)), s))


def census_entry(census) -> dict:
    return {
        "positive": census.positive,
        "negative": census.negative,
        "positive_significant": census.positive_significant,
        "negative_significant": census.negative_significant,
        "zero": census.zero,
    }


def build_report(
    trend_sets: Mapping[str, Sequence[TrendRecord]],
    alpha: float,
    adjusted: bool = False,
    config: Optional[Mapping] = None,
) -> dict:
    """Census, significance drop and pairwise comparisons for every dataset given.

    Pairwise tables use the adjusted p-values when ``adjusted`` is set.
    """
    if not trend_sets or not any(trend_sets.values()):
        raise EmptyInput("no trend results to report")
    labels = _ordered(k for k, v in trend_sets.items() if v)
    census = {"naive": {}, "adjusted": {}}
    drops = {}
    for label in labels:
        fits = trend_sets[label]
        census["naive"][label] = census_entry(trend_census(fits, alpha, False, label))
        census["adjusted"][label] = census_entry(trend_census(fits, alpha, True, label))
        d = significance_drop_report(fits, alpha)
        drops[label] = {"naive_count": d.naive_count, "adjusted_count": d.adjusted_count,
                        "drop_fraction": d.drop_fraction}

    comparisons, reconciliation = [], []
    for a, b in combinations(labels, 2):
        agree = pairwise_agreement(trend_sets[a], trend_sets[b], alpha, adjusted, (a, b))
        brk = conditional_breakdown(trend_sets[a], trend_sets[b], alpha, adjusted, (a, b))
        comparisons.append({
            "a": a,
            "b": b,
            "n_common": agree.n_common,
            "sign_counts": {_cell(k): agree.sign_counts[k] for k in SIGN_CELLS},
            "significance_counts": {_cell(k): agree.significance_counts[k] for k in SIG_CELLS},
            "sign_disagreements": agree.sign_disagreements,
            "significance_disagreements": agree.significance_disagreements,
            "breakdown": {_cell(s): {_cell(k): brk.tables[s][k] for k in SIGN_CELLS} for s in SIG_CELLS},
        })
        reconciliation.append({"a": a, "b": b, "only_a": list(agree.only_a), "only_b": list(agree.only_b),
                               "zero_slope": list(agree.zero_slope)})

    report = {
        "schema_version": SCHEMA_VERSION,
        "alpha": alpha,
        "comparison_p_values": "adjusted" if adjusted else "naive",
        "datasets": labels,
        "census": census,
        "significance_drop": drops,
        "comparisons": comparisons,
        "reconciliation": reconciliation,
    }
    if config is not None:
        report["config"] = dict(config)
    if "raw" in trend_sets and "calibrated" in trend_sets and trend_sets["raw"] and trend_sets["calibrated"]:
        report["deltas"] = delta_table(trend_sets["raw"], trend_sets["calibrated"],
                                       trend_sets.get("calibrated_imputed") or None)
    return report


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _g(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_json(report: Mapping) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _table(header: Sequence[str], rows: Sequence[Sequence], indent: str = "") -> list[str]:
    cells = [list(map(_g, header))] + [list(map(_g, r)) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for k, r in enumerate(cells):
        first = r[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append(indent + "  ".join([first, *rest]).rstrip())
        if k == 0:
            lines.append(indent + "  ".join("-" * w for w in widths))
    return lines


def render_text(report: Mapping) -> str:
    out = []
    alpha = report.get("alpha")
    labels = report.get("datasets", [])
    census = report.get("census", {})
    for analysis in ("naive", "adjusted"):
        block = census.get(analysis)
        if not block:
            continue
        out.append(f"Trend census ({analysis} p-values, alpha={_g(alpha)})")
        rows = []
        for sym, key in (("+", "positive"), ("-", "negative"), ("+*", "positive_significant"),
                         ("-*", "negative_significant"), ("0", "zero")):
            rows.append([sym, *(block[l][key] for l in labels if l in block)])
        out += _table(["Trend", *(l for l in labels if l in block)], rows)
        out.append("")

    drops = report.get("significance_drop")
    if drops:
        out.append("Significant trends identified")
        rows = [[l, drops[l]["naive_count"], drops[l]["adjusted_count"], drops[l]["drop_fraction"]]
                for l in labels if l in drops]
        out += _table(["Data", "Simple", "Predictive", "Drop"], rows)
        out.append("")

    comps = report.get("comparisons", [])
    if comps:
        out.append(f"Agreement tables ({report.get('comparison_p_values', 'naive')} p-values; "
                   "P not significant, p significant)")
        sign_keys = ["--", "-+", "+-", "++"]
        sig_keys = ["PP", "Pp", "pP", "pp"]
        rows = [[f"{c['a']} - {c['b']}", *(c["sign_counts"][k] for k in sign_keys),
                 *(c["significance_counts"][k] for k in sig_keys), c["n_common"]] for c in comps]
        out += _table(["Pair", "- -", "- +", "+ -", "+ +", "P P", "P p", "p P", "p p", "n"], rows)
        out.append("")
        for c in comps:
            out.append(f"Breakdown {c['a']} - {c['b']}")
            rows = [[f"{s[0]} {s[1]}", *(c["breakdown"][s][k] for k in sign_keys)] for s in sig_keys]
            out += _table(["Significance", "- -", "- +", "+ -", "+ +"], rows, indent="  ")
            out.append("")

    recon = [r for r in report.get("reconciliation", []) if r["only_a"] or r["only_b"] or r["zero_slope"]]
    if recon:
        out.append("Reconciliation (stations excluded from pairwise tables)")
        for r in recon:
            out.append(f"  {r['a']} - {r['b']}: only in {r['a']}: {', '.join(r['only_a']) or '-'}; "
                       f"only in {r['b']}: {', '.join(r['only_b']) or '-'}; "
                       f"zero slope: {', '.join(r['zero_slope']) or '-'}")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


CENSUS_CSV_COLUMNS = ("analysis", "dataset", "positive", "negative", "positive_significant",
                      "negative_significant", "zero")


def render_csv(report: Mapping) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CENSUS_CSV_COLUMNS)
    for analysis in ("naive", "adjusted"):
        for label in report.get("datasets", []):
            c = report.get("census", {}).get(analysis, {}).get(label)
            if c is not None:
                w.writerow([analysis, label, *(c[k] for k in CENSUS_CSV_COLUMNS[2:])])
    return buf.getvalue()


def render_delta_csv(rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rank", "station_id", "delta_calibrated", "delta_imputed"))
    for r in rows:
        w.writerow([r["rank"], r["station_id"], _g(r["delta_calibrated"]), _g(r["delta_imputed"])])
    return buf.getvalue()


_RENDERERS = {"json": render_json, "text": render_text, "csv": render_csv}


def write_report(results: Mapping, fmt: str = "json", path=None) -> None:
    """Render ``results`` and write to ``path`` (standard output when None)."""
    if not results:
        raise EmptyInput("nothing to report")
    try:
        render = _RENDERERS[fmt]
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}") from None
    text = render(results)
    if path is None:
        sys.stdout.write(text)
        return
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def schema_path(name: str) -> Path:
    """Location of a JSON schema shipped with the package."""
    return Path(__file__).with_name("schemas") / f"{name}.schema.json"


def load_schema(name: str) -> dict:
    return json.loads(schema_path(name).read_text(encoding="utf-8"))
