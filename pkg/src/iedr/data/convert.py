"""Turn raw delimited logs (Frappe, Yelp, Amazon extracts) into the canonical TSV."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .io import parse_order_key
from .schema import DataError
from .split import bucketize_time


@dataclass
class TableLayout:
    user_key: str
    item_key: str
    user_cols: list[str] = field(default_factory=list)
    item_cols: list[str] = field(default_factory=list)
    context_cols: list[str] = field(default_factory=list)
    order_col: str | None = None
    time_bucket_col: str | None = None
    delimiter: str = "\t"


PRESETS = {
    "frappe": TableLayout(
        user_key="user", item_key="item",
        context_cols=["daytime", "weekday", "isweekend", "homework", "cost", "weather",
                      "country", "city"],
    ),
    "amazon": TableLayout(
        user_key="user", item_key="item", order_col="timestamp", time_bucket_col="timestamp",
        delimiter=",",
    ),
    "yelp": TableLayout(
        user_key="user_id", item_key="business_id", order_col="date", delimiter="\t",
        context_cols=["weekday", "hour"],
    ),
}


def _clean(value: str) -> str:
    return value.strip().replace(",", ";").replace("\t", " ")


def load_item_meta(path, key: str, cols: list[str], delimiter: str = "\t") -> dict[str, list[str]]:
    meta = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh, delimiter=delimiter):
            meta[row[key]] = [f"{c}:{_clean(row[c])}" for c in cols]
    return meta


def convert_table(src, dst, layout: TableLayout, item_meta: dict[str, list[str]] | None = None,
                  label_col: str | None = None) -> int:
    """Write one canonical line per raw row; returns the number of rows written.

    User and item keys are always emitted as ``user_id``/``item_id`` features.
    """
    written = 0
    with open(src, encoding="utf-8", newline="") as fin, \
            open(dst, "w", encoding="utf-8", newline="\n") as fout:
        reader = csv.DictReader(fin, delimiter=layout.delimiter)
        needed = [layout.user_key, layout.item_key, *layout.user_cols, *layout.item_cols,
                  *layout.context_cols]
        if layout.order_col:
            needed.append(layout.order_col)
        missing = [c for c in needed if reader.fieldnames is None or c not in reader.fieldnames]
        if missing:
            raise DataError(f"{src}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            ukey, ikey = _clean(row[layout.user_key]), _clean(row[layout.item_key])
            user = [f"user_id:{ukey}"] + [f"{c}:{_clean(row[c])}" for c in layout.user_cols]
            item = [f"item_id:{ikey}"] + [f"{c}:{_clean(row[c])}" for c in layout.item_cols]
            if item_meta is not None:
                item += item_meta.get(row[layout.item_key], [])
            ctx = [f"{c}:{_clean(row[c])}" for c in layout.context_cols]
            order = ""
            if layout.order_col:
                raw = row[layout.order_col].strip()
                order = repr(parse_order_key(raw)) if raw else ""
            if layout.time_bucket_col:
                raw = row[layout.time_bucket_col].strip()
                stamp = float(raw) if raw.replace(".", "", 1).isdigit() else raw
                ctx.append(bucketize_time(stamp))
            if not ctx:
                raise DataError(f"{src}:{lineno}: no context features")
            label = row[label_col].strip() if label_col else "1"
            fout.write("\t".join([label, ukey, ikey, order, ",".join(user), ",".join(item),
                                  ",".join(ctx)]) + "\n")
            written += 1
    return written


def convert_preset(src, dst, preset: str, item_meta_path=None) -> int:
    if preset not in PRESETS:
        raise DataError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    layout = PRESETS[preset]
    meta = None
    if item_meta_path is not None and preset == "frappe":
        meta = load_item_meta(item_meta_path, "item", ["category", "language", "price", "rating"])
    return convert_table(Path(src), Path(dst), layout, item_meta=meta)
