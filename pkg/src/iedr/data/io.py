"""Canonical TSV dataset format.

One instance per line::

    label  user_key  item_key  order_key  user_feats  item_feats  context_feats

where each ``*_feats`` cell is a comma-separated list of ``field:value``
tokens. An empty ``order_key`` falls back to the line number.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path
from typing import Iterable

from .schema import GROUPS, UNK, DataError, Instance, Vocabulary

N_COLUMNS = 7


def parse_order_key(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = dt.datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"unparseable order key {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.timestamp()


def _parse_feats(cell: str, group: str, vocab: Vocabulary, lineno: int) -> tuple[int, ...]:
    ids = []
    for tok in cell.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" not in tok:
            raise DataError(f"line {lineno}: feature token {tok!r} lacks 'field:value'")
        fname, value = tok.split(":", 1)
        try:
            if value == UNK:
                vocab._register_field(fname, group)
                ids.append(vocab.unk(fname))
            else:
                ids.append(vocab.lookup(fname, value, group))
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    if not ids:
        raise DataError(f"line {lineno}: empty {group} feature set")
    return tuple(ids)


def parse_lines(lines: Iterable[str], vocab: Vocabulary | None = None
                ) -> tuple[Vocabulary, list[Instance]]:
    vocab = vocab if vocab is not None else Vocabulary()
    instances = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise DataError(f"line {lineno}: expected {N_COLUMNS} tab-separated columns, got {len(cols)}")
        label_s, user_key, item_key, order_s = cols[:4]
        if label_s not in ("0", "1"):
            raise DataError(f"line {lineno}: label must be 0 or 1, got {label_s!r}")
        try:
            order = parse_order_key(order_s)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        feats = [_parse_feats(cols[4 + k], g, vocab, lineno) for k, g in enumerate(GROUPS)]
        instances.append(Instance(feats[0], feats[1], feats[2], int(label_s), user_key, item_key,
                                  float(lineno - 1) if order is None else order))
    return vocab, instances


def ingest(path, vocab: Vocabulary | None = None) -> tuple[Vocabulary, list[Instance]]:
    """Read a canonical TSV file.

    Pass the training vocabulary, frozen, when reading held-out files so that
    unseen values map to their field's UNK index.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh, vocab)


def format_instance(inst: Instance, vocab: Vocabulary) -> str:
    cells = [",".join(vocab.token(i) for i in ids)
             for ids in (inst.user_feats, inst.item_feats, inst.context_feats)]
    order = "" if inst.order_key is None else repr(float(inst.order_key))
    return "\t".join([str(inst.label), inst.user_key, inst.item_key, order, *cells])


def write_tsv(path, instances: Iterable[Instance], vocab: Vocabulary) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(format_instance(inst, vocab) + "\n")
    return path
