"""Review corpus ingestion, canonical serialization and train/test splitting."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Iterator

import numpy as np

logger = logging.getLogger(__name__)

# Abort ingestion when more than this share of data rows is rejected.
MAX_SKIP_FRACTION = 0.01

CANONICAL_KEYS = ("review_id", "user_id", "product_id", "score", "summary", "body")


class DataError(ValueError):
    """Input data could not be turned into a usable dataset."""


@dataclass(frozen=True)
class RecordError:
    line: int
    reason: str


@dataclass(frozen=True)
class ReviewRecord:
    review_id: str
    user_id: str
    product_id: str
    score: int
    summary: str = ""
    body: str = ""
    timestamp: int | None = None

    def __post_init__(self):
        if isinstance(self.score, bool) or not isinstance(self.score, int):
            raise DataError(f"score must be an integer, got {self.score!r}")
        if not 1 <= self.score <= 5:
            raise DataError(f"score {self.score} outside 1..5")
        if not self.user_id:
            raise DataError("empty user_id")
        if not self.product_id:
            raise DataError("empty product_id")

    def to_canonical(self) -> dict:
        return {
            "review_id": self.review_id,
            "user_id": self.user_id,
            "product_id": self.product_id,
            "score": self.score,
            "summary": self.summary,
            "body": self.body,
        }


@dataclass(frozen=True)
class Dataset:
    records: tuple[ReviewRecord, ...]
    source_tag: str = ""
    errors: tuple[RecordError, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ReviewRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def scores(self) -> np.ndarray:
        return np.fromiter((r.score for r in self.records), dtype=np.int64, count=len(self.records))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: Fraction = Fraction(4, 5)
    seed: int = 0

    def __post_init__(self):
        frac = _as_fraction(self.train_fraction)
        if not 0 < frac < 1:
            raise ValueError(f"train_fraction must lie strictly in (0, 1), got {self.train_fraction}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "train_fraction", frac)


def _as_fraction(x) -> Fraction:
    # str() first so that 0.8 means 4/5 rather than its binary expansion
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _text_stream(stream: IO) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _finish(records: list[ReviewRecord], errors: list[RecordError], n_rows: int, tag: str) -> Dataset:
    for err in errors[:20]:
        logger.warning("%s line %d: %s", tag or "input", err.line, err.reason)
    if len(errors) > 20:
        logger.warning("... %d more rejected rows", len(errors) - 20)
    if n_rows and len(errors) > MAX_SKIP_FRACTION * n_rows:
        raise DataError(f"{len(errors)} of {n_rows} rows rejected (limit {MAX_SKIP_FRACTION:.0%})")
    return Dataset(tuple(records), tag, tuple(errors))


def _parse_score(raw) -> int:
    if isinstance(raw, bool):
        raise DataError(f"bad score {raw!r}")
    if isinstance(raw, str):
        raw = raw.strip()
        try:
            raw = int(raw)
        except ValueError:
            try:
                raw = float(raw)
            except ValueError:
                raise DataError(f"bad score {raw!r}") from None
    if isinstance(raw, float):
        if not math.isfinite(raw) or raw != int(raw):
            raise DataError(f"non-integral score {raw!r}")
        raw = int(raw)
    if not isinstance(raw, int):
        raise DataError(f"bad score {raw!r}")
    return raw


def _opt_int(raw) -> int | None:
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except (TypeError, ValueError):
        return None


def parse_csv(stream: IO, source_tag: str = "csv") -> Dataset:
    """Parse a Fine Food style CSV (``Id, ProductId, UserId, ..., Score, Time, Summary, Text``).

    Rejected rows are counted and logged; ingestion fails if more than 1% of
    data rows are rejected.
    """
    reader = csv.reader(_text_stream(stream))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV input") from None
    col = {name.strip(): i for i, name in enumerate(header)}
    missing = [c for c in ("ProductId", "UserId", "Score", "Summary", "Text") if c not in col]
    if missing:
        raise DataError(f"CSV header lacks columns {missing}")
    width = len(header)

    records, errors = [], []
    n_rows = 0
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        n_rows += 1
        if len(row) != width:
            errors.append(RecordError(line, f"expected {width} fields, got {len(row)}"))
            continue
        try:
            rid = row[col["Id"]] if "Id" in col else str(n_rows)
            records.append(
                ReviewRecord(
                    review_id=rid,
                    user_id=row[col["UserId"]].strip(),
                    product_id=row[col["ProductId"]].strip(),
                    score=_parse_score(row[col["Score"]]),
                    summary=row[col["Summary"]],
                    body=row[col["Text"]],
                    timestamp=_opt_int(row[col["Time"]]) if "Time" in col else None,
                )
            )
        except DataError as exc:
            errors.append(RecordError(line, str(exc)))
    return _finish(records, errors, n_rows, source_tag)


def parse_jsonl(stream: IO, source_tag: str = "jsonl") -> Dataset:
    """Parse SNAP-style JSON lines (``reviewerID, asin, overall, summary, reviewText``)."""
    records, errors = [], []
    n_rows = 0
    for line_no, line in enumerate(_text_stream(stream), start=1):
        if not line.strip():
            continue
        n_rows += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise DataError("line is not a JSON object")
            records.append(
                ReviewRecord(
                    review_id=str(obj.get("reviewID", line_no)),
                    user_id=str(obj.get("reviewerID") or ""),
                    product_id=str(obj.get("asin") or ""),
                    score=_parse_score(obj.get("overall")),
                    summary=obj.get("summary") or "",
                    body=obj.get("reviewText") or "",
                    timestamp=_opt_int(obj.get("unixReviewTime")),
                )
            )
        except (DataError, json.JSONDecodeError) as exc:
            errors.append(RecordError(line_no, str(exc)))
    return _finish(records, errors, n_rows, source_tag)


def parse_canonical(stream: IO, source_tag: str = "canonical") -> Dataset:
    records, errors = [], []
    n_rows = 0
    for line_no, line in enumerate(_text_stream(stream), start=1):
        if not line.strip():
            continue
        n_rows += 1
        try:
            obj = json.loads(line)
            records.append(
                ReviewRecord(
                    review_id=str(obj["review_id"]),
                    user_id=str(obj["user_id"]),
                    product_id=str(obj["product_id"]),
                    score=_parse_score(obj["score"]),
                    summary=obj.get("summary") or "",
                    body=obj.get("body") or "",
                )
            )
        except (DataError, KeyError, TypeError, json.JSONDecodeError) as exc:
            errors.append(RecordError(line_no, f"{type(exc).__name__}: {exc}"))
    return _finish(records, errors, n_rows, source_tag)


def dumps_canonical(records: Iterable[ReviewRecord]) -> str:
    return "".join(json.dumps(r.to_canonical(), ensure_ascii=False) + "\n" for r in records)


def write_canonical(records: Iterable[ReviewRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_canonical(records))


def read_dataset(path, fmt: str | None = None) -> Dataset:
    """Load a corpus file; the format is guessed from the extension when not given."""
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "canonical"
    parser = {"csv": parse_csv, "jsonl": parse_jsonl, "canonical": parse_canonical}[fmt]
    with open(path, "rb") as fh:
        return parser(fh, source_tag=path)


def train_test_split(data: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle, then the first ceil(fraction * N) records go to train."""
    n = len(data)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    frac = spec.train_fraction
    n_train = -((-frac.numerator * n) // frac.denominator)
    order = np.random.default_rng(spec.seed).permutation(n)
    recs = data.records
    train = tuple(recs[i] for i in order[:n_train])
    test = tuple(recs[i] for i in order[n_train:])
    return Dataset(train, f"{data.source_tag}#train"), Dataset(test, f"{data.source_tag}#test")
