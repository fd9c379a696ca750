"""Scorecard ingest: parsing, validation and index mapping.

A dataset is an ordered collection of single-innings records plus the
index maps the model needs: players numbered 1..P in order of first
appearance, a contiguous year index 1..Y covering every calendar year in
span (including years with no innings, so the smoothing prior can bridge
them), calendar-decade eras 1..D, and oppositions 1..O numbered
alphabetically with the first label as reference.
"""

import csv
import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

HOME = 1
AWAY = 2

REQUIRED_COLUMNS = (
    "player", "year", "age", "home", "match_innings",
    "opposition", "runs", "not_out",
)


class DataError(ValueError):
    """Malformed input data (parse errors carry the offending line number)."""


@dataclass(frozen=True)
class InningsRecord:
    """One batting innings with its covariates and outcome flags."""

    player_id: str
    calendar_year: int
    age: float
    home: int            # 1 = home, 2 = away (neutral venues arrive as away)
    match_innings: int   # 1..4, innings of the match
    opposition: int      # 1..O, alphabetical country index
    runs: int
    not_out: bool        # censoring indicator: innings ended undefeated

    def __post_init__(self):
        if self.runs < 0:
            raise ValueError(f"runs must be non-negative, got {self.runs}")
        if self.home not in (HOME, AWAY):
            raise ValueError(f"home must be 1 (home) or 2 (away), got {self.home}")
        if not 1 <= self.match_innings <= 4:
            raise ValueError(f"match_innings must be 1..4, got {self.match_innings}")
        if self.opposition < 1:
            raise ValueError(f"opposition index must be >= 1, got {self.opposition}")
        if not 10.0 < self.age < 60.0:
            raise ValueError(f"age {self.age} outside sanity bounds (10, 60)")

    @property
    def duck(self) -> bool:
        """Completed innings of exactly zero runs; a censored zero is not a duck."""
        return self.runs == 0 and not self.not_out


def decade_key(year: int) -> int:
    """Calendar decade bucket of a year (1877-1879 share bucket 187)."""
    return year // 10


@dataclass(frozen=True)
class RecordArrays:
    """Zero-based numpy views over a dataset, for vectorised evaluation."""

    player: np.ndarray      # 0..P-1
    year: np.ndarray        # 0..Y-1
    age: np.ndarray
    away: np.ndarray        # float 0/1, 1 when played away
    innings: np.ndarray     # 0..3
    opposition: np.ndarray  # 0..O-1
    decade: np.ndarray      # 0..D-1
    runs: np.ndarray        # int
    not_out: np.ndarray     # bool
    duck: np.ndarray        # bool

    @property
    def n(self) -> int:
        return self.player.size


@dataclass(frozen=True)
class Dataset:
    """Validated innings collection plus index maps and dimension counts."""

    records: tuple
    player_ids: tuple
    first_year: int
    last_year: int
    opposition_labels: tuple

    def __post_init__(self):
        index = self.player_index
        years = self.year_index
        n_opp = len(self.opposition_labels)
        for rec in self.records:
            if rec.player_id not in index:
                raise DataError(f"record for unregistered player {rec.player_id!r}")
            if rec.calendar_year not in years:
                raise DataError(
                    f"record year {rec.calendar_year} outside span "
                    f"{self.first_year}-{self.last_year}"
                )
            if rec.opposition > n_opp:
                raise DataError(
                    f"opposition index {rec.opposition} exceeds O={n_opp}"
                )

    @cached_property
    def player_index(self) -> dict:
        return {pid: i + 1 for i, pid in enumerate(self.player_ids)}

    @cached_property
    def year_index(self) -> dict:
        return {y: y - self.first_year + 1
                for y in range(self.first_year, self.last_year + 1)}

    @cached_property
    def decade_of_year(self) -> dict:
        keys = sorted({decade_key(y)
                       for y in range(self.first_year, self.last_year + 1)})
        rank = {k: d + 1 for d, k in enumerate(keys)}
        return {self.year_index[y]: rank[decade_key(y)]
                for y in range(self.first_year, self.last_year + 1)}

    @property
    def dims(self) -> tuple:
        """(P, Y, D, O)."""
        return (len(self.player_ids),
                self.last_year - self.first_year + 1,
                len(set(self.decade_of_year.values())),
                len(self.opposition_labels))

    @cached_property
    def per_player_counts(self) -> np.ndarray:
        counts = np.zeros(len(self.player_ids), dtype=int)
        for rec in self.records:
            counts[self.player_index[rec.player_id] - 1] += 1
        return counts

    @cached_property
    def arrays(self) -> RecordArrays:
        pidx = self.player_index
        yidx = self.year_index
        dec = self.decade_of_year
        recs = self.records
        return RecordArrays(
            player=np.array([pidx[r.player_id] - 1 for r in recs], dtype=np.intp),
            year=np.array([yidx[r.calendar_year] - 1 for r in recs], dtype=np.intp),
            age=np.array([r.age for r in recs], dtype=float),
            away=np.array([1.0 if r.home == AWAY else 0.0 for r in recs]),
            innings=np.array([r.match_innings - 1 for r in recs], dtype=np.intp),
            opposition=np.array([r.opposition - 1 for r in recs], dtype=np.intp),
            decade=np.array([dec[yidx[r.calendar_year]] - 1 for r in recs],
                            dtype=np.intp),
            runs=np.array([r.runs for r in recs], dtype=np.int64),
            not_out=np.array([r.not_out for r in recs], dtype=bool),
            duck=np.array([r.duck for r in recs], dtype=bool),
        )

    def fingerprint(self) -> str:
        """Stable content hash used to match chains to their dataset."""
        h = hashlib.sha256()
        h.update(f"{self.first_year}|{self.last_year}\n".encode())
        h.update(("|".join(self.player_ids) + "\n").encode())
        h.update(("|".join(self.opposition_labels) + "\n").encode())
        for r in self.records:
            h.update(
                f"{r.player_id}|{r.calendar_year}|{float(r.age).hex()}|"
                f"{r.home}|{r.match_innings}|{r.opposition}|{r.runs}|"
                f"{int(r.not_out)}\n".encode()
            )
        return h.hexdigest()


def dataset_from_records(records, players=None, year_span=None,
                         opposition_labels=None) -> Dataset:
    """Assemble a Dataset, deriving any registry not given explicitly.

    Registries may extend past the records (players with no innings keep an
    index slot; so do years with no innings inside the span), which the
    smoothing prior and prior-recovery runs rely on.
    """
    records = tuple(records)
    if players is None:
        seen = {}
        for r in records:
            seen.setdefault(r.player_id, None)
        players = tuple(seen)
    if year_span is None:
        if not records:
            raise DataError("empty dataset and no year span given")
        years = [r.calendar_year for r in records]
        year_span = (min(years), max(years))
    if opposition_labels is None:
        if not records:
            raise DataError("empty dataset and no opposition labels given")
        n_opp = max(r.opposition for r in records)
        opposition_labels = tuple(f"OPP{q:02d}" for q in range(1, n_opp + 1))
    if not players:
        raise DataError("dataset has no players")
    return Dataset(
        records=records,
        player_ids=tuple(players),
        first_year=int(year_span[0]),
        last_year=int(year_span[1]),
        opposition_labels=tuple(opposition_labels),
    )


def _parse_row(row: dict, opposition_index: dict, lineno: int) -> InningsRecord:
    def fail(msg):
        raise DataError(f"line {lineno}: {msg}")

    try:
        player = row["player"].strip()
        year = int(row["year"])
        age = float(row["age"])
        home_raw = row["home"].strip().upper()
        match_innings = int(row["match_innings"])
        opp_label = row["opposition"].strip()
        runs = int(row["runs"])
        not_out_raw = row["not_out"].strip()
    except (KeyError, ValueError, AttributeError) as exc:
        fail(f"malformed row ({exc})")
    if not player:
        fail("blank player id")
    if home_raw not in ("H", "A"):
        fail(f"home must be 'H' or 'A', got {row['home']!r}")
    if not_out_raw not in ("0", "1"):
        fail(f"not_out must be 0 or 1, got {row['not_out']!r}")
    if opp_label not in opposition_index:
        fail(f"unknown opposition label {row['opposition']!r}")
    try:
        return InningsRecord(
            player_id=player,
            calendar_year=year,
            age=age,
            home=HOME if home_raw == "H" else AWAY,
            match_innings=match_innings,
            opposition=opposition_index[opp_label],
            runs=runs,
            not_out=not_out_raw == "1",
        )
    except ValueError as exc:
        fail(str(exc))


def load_csv(path) -> Dataset:
    """Load the scorecard CSV schema into a validated Dataset.

    Header: ``player,date,year,age,home,match_innings,opposition,runs,not_out``
    with ``date`` optional.  Opposition labels are mapped to indices
    alphabetically, the first label being the reference country.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        rows = [(reader.line_num, row) for row in reader]

    if not rows:
        raise DataError(f"{path}: no data rows")

    labels = set()
    for lineno, row in rows:
        label = (row.get("opposition") or "").strip()
        if not label:
            raise DataError(f"line {lineno}: blank opposition label")
        labels.add(label)
    opposition_labels = tuple(sorted(labels))
    opposition_index = {lab: q + 1 for q, lab in enumerate(opposition_labels)}

    records = []
    players = {}
    for lineno, row in rows:
        rec = _parse_row(row, opposition_index, lineno)
        records.append(rec)
        players.setdefault(rec.player_id, None)

    return dataset_from_records(
        records,
        players=tuple(players),
        opposition_labels=opposition_labels,
    )


def write_csv(ds: Dataset, path) -> None:
    """Emit the loader's CSV schema (date column present but empty)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["player", "date", "year", "age", "home", "match_innings",
             "opposition", "runs", "not_out"]
        )
        for r in ds.records:
            writer.writerow([
                r.player_id, "", r.calendar_year, repr(float(r.age)),
                "H" if r.home == HOME else "A", r.match_innings,
                ds.opposition_labels[r.opposition - 1], r.runs,
                int(r.not_out),
            ])


def validate(ds: Dataset) -> list:
    """Non-mutating sanity pass; returns human-readable warnings."""
    warnings = []
    counts = ds.per_player_counts
    for pid, count in zip(ds.player_ids, counts):
        if count == 1:
            warnings.append(f"player {pid!r} has a single career innings")
    for i, rec in enumerate(ds.records):
        if not 15.0 <= rec.age <= 55.0:
            warnings.append(
                f"record {i}: age {rec.age} for {rec.player_id!r} "
                "outside the usual 15-55 range"
            )
    seen = {}
    for i, rec in enumerate(ds.records):
        key = (rec.player_id, rec.calendar_year, float(rec.age), rec.home,
               rec.match_innings, rec.opposition, rec.runs, rec.not_out)
        if key in seen:
            warnings.append(f"record {i} duplicates record {seen[key]}")
        else:
            seen[key] = i
    return warnings
