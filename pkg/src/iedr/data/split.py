from __future__ import annotations

import datetime as dt
from collections import defaultdict

from .schema import DataError, Instance, SplitSpec


def split_leave_last_two(instances: list[Instance], spec: SplitSpec = SplitSpec()
                         ) -> tuple[list[Instance], list[Instance], list[Instance]]:
    """Per user: last record to test, second-last to valid, the rest to train.

    Users with fewer than ``spec.min_records`` records are dropped. Records
    are ordered by ``order_key``; ties keep input order.
    """
    by_user: dict[str, list[tuple[int, Instance]]] = defaultdict(list)
    for pos, inst in enumerate(instances):
        if inst.order_key is None:
            raise DataError(f"instance {pos} (user {inst.user_key!r}) has no ordering key")
        by_user[inst.user_key].append((pos, inst))
    train, valid, test = [], [], []
    for records in by_user.values():
        if len(records) < spec.min_records:
            continue
        records.sort(key=lambda r: (r[1].order_key, r[0]))
        ordered = [r[1] for r in records]
        train.extend(ordered[:-2])
        valid.append(ordered[-2])
        test.append(ordered[-1])
    return train, valid, test


def bucketize_time(timestamp, bucket: str = "month") -> str:
    """Month-granularity context token, e.g. ``time_bucket:2014-03``.

    Accepts epoch seconds, ISO strings, ``date`` or ``datetime`` values.
    """
    if bucket != "month":
        raise ValueError(f"unsupported bucket {bucket!r}")
    if isinstance(timestamp, (int, float)):
        stamp = dt.datetime.fromtimestamp(float(timestamp), tz=dt.timezone.utc)
    elif isinstance(timestamp, str):
        stamp = dt.datetime.fromisoformat(timestamp)
    elif isinstance(timestamp, (dt.date, dt.datetime)):
        stamp = timestamp
    else:
        raise TypeError(f"cannot bucketize {type(timestamp).__name__}")
    return f"time_bucket:{stamp.year:04d}-{stamp.month:02d}"
