"""Trial lists, score files, and embedding files.

Text formats follow the Kaldi/VoxCeleb conventions: whitespace-separated
tokens, one record per line, trailing newline optional.  Trial lines are
either ``enroll test`` or ``label enroll test`` with label 1 = target,
0 = nontarget.  Score lines are ``enroll test score``.  Embedding text
lines are ``utt-id v1 v2 ... vd``; repeated ids append segment vectors.

The binary embedding container starts with the magic bytes ``EMB1``,
then a little-endian uint32 record count, then per record: uint16 id
length, the UTF-8 id, uint32 dimension, and that many little-endian
float32 components.  EmbeddingSet therefore keeps float32 as its
canonical dtype so binary round-trips are bit-exact.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import AlignmentError, DataError, DuplicatePairError, ParseError

__all__ = [
    "TrialPair",
    "TrialList",
    "ScoreSet",
    "EmbeddingSet",
    "AlignedScores",
    "parse_trial_list",
    "write_trial_list",
    "parse_score_file",
    "write_score_file",
    "read_embeddings",
    "write_embeddings",
    "align_score_sets",
]

EMB_MAGIC = b"EMB1"


def _check_utt_id(token: str) -> str:
    if not token or any(c.isspace() for c in token):
        raise DataError(f"invalid utterance id {token!r}")
    return token


class TrialPair(NamedTuple):
    enroll: str
    test: str
    label: bool | None = None


class TrialList:
    """Ordered, duplicate-free sequence of trial pairs.

    Labels are all-or-none: either every pair carries a target/nontarget
    label or none does.
    """

    def __init__(self, pairs: Iterable[TrialPair | tuple]):
        pairs = [TrialPair(*p) for p in pairs]
        if not pairs:
            raise DataError("trial list is empty")
        labeled = pairs[0].label is not None
        seen: set[tuple[str, str]] = set()
        for p in pairs:
            _check_utt_id(p.enroll)
            _check_utt_id(p.test)
            if (p.label is not None) != labeled:
                raise DataError("mixed labeled and unlabeled trial pairs")
            key = (p.enroll, p.test)
            if key in seen:
                raise DuplicatePairError(f"duplicate trial pair {p.enroll} {p.test}")
            seen.add(key)
        self._pairs = pairs
        self._labeled = labeled

    @property
    def pairs(self) -> list[TrialPair]:
        return list(self._pairs)

    @property
    def labeled(self) -> bool:
        return self._labeled

    def labels(self) -> list[bool]:
        if not self._labeled:
            raise DataError("trial list is unlabeled")
        return [bool(p.label) for p in self._pairs]

    def labels_for(self, pairs: Sequence[tuple[str, str]]) -> list[bool]:
        """Labels in the order of an externally supplied pair sequence."""
        if not self._labeled:
            raise DataError("trial list is unlabeled")
        table = {(p.enroll, p.test): bool(p.label) for p in self._pairs}
        out = []
        for enroll, test in pairs:
            if (enroll, test) not in table:
                raise AlignmentError(f"pair {enroll} {test} not in trial list")
            out.append(table[(enroll, test)])
        return out

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[TrialPair]:
        return iter(self._pairs)

    def __getitem__(self, i):
        return self._pairs[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, TrialList) and self._pairs == other._pairs

    def __repr__(self) -> str:
        tag = "labeled" if self._labeled else "unlabeled"
        return f"TrialList({len(self._pairs)} pairs, {tag})"


class ScoreSet:
    """Ordered (enroll, test, score) entries; entry order is the alignment
    identity, so two sets with the same pairs in different order differ."""

    def __init__(self, entries: Iterable[tuple[str, str, float]]):
        clean = []
        for enroll, test, score in entries:
            _check_utt_id(enroll)
            _check_utt_id(test)
            score = float(score)
            if not math.isfinite(score):
                raise DataError(f"non-finite score for pair {enroll} {test}")
            clean.append((enroll, test, score))
        if not clean:
            raise DataError("score set is empty")
        self._entries = clean

    @property
    def entries(self) -> list[tuple[str, str, float]]:
        return list(self._entries)

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return [(e, t) for e, t, _ in self._entries]

    @property
    def scores(self) -> np.ndarray:
        return np.array([s for _, _, s in self._entries], dtype=np.float64)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, ScoreSet) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"ScoreSet({len(self._entries)} entries)"


class EmbeddingSet:
    """Map from utterance id to a (n_segments, dim) float32 array.

    Every vector in the set shares one dimension; every utterance has at
    least one segment vector; all components are finite.
    """

    def __init__(self, entries: Mapping[str, np.ndarray | Sequence]):
        if not entries:
            raise DataError("embedding set is empty")
        store: dict[str, np.ndarray] = {}
        dim: int | None = None
        for utt, vecs in entries.items():
            _check_utt_id(utt)
            arr = np.asarray(vecs, dtype=np.float32)
            if arr.ndim == 1:
                arr = arr[None, :]
            if arr.ndim != 2 or arr.shape[0] < 1:
                raise DataError(f"utterance {utt!r} needs at least one vector")
            if arr.shape[1] == 0:
                raise DataError(f"utterance {utt!r} has zero-dimension vectors")
            if dim is None:
                dim = int(arr.shape[1])
            elif int(arr.shape[1]) != dim:
                raise DataError(
                    f"dimension mismatch for {utt!r}: {arr.shape[1]} != {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite embedding components for {utt!r}")
            arr = arr.copy()
            arr.setflags(write=False)
            store[utt] = arr
        self._entries = store
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def ids(self) -> list[str]:
        return list(self._entries)

    def __contains__(self, utt: str) -> bool:
        return utt in self._entries

    def __getitem__(self, utt: str) -> np.ndarray:
        if utt not in self._entries:
            raise DataError(f"utterance {utt!r} missing from embedding set")
        return self._entries[utt]

    def __len__(self) -> int:
        return len(self._entries)

    def mean_vector(self, utt: str) -> np.ndarray:
        """Segment mean in float64, one vector per utterance."""
        return self[utt].astype(np.float64).mean(axis=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return False
        if self.ids != other.ids:
            return False
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in ((self._entries[u], other._entries[u]) for u in self._entries)
        )

    def __repr__(self) -> str:
        return f"EmbeddingSet({len(self._entries)} utterances, dim={self._dim})"


@dataclass(frozen=True)
class AlignedScores:
    """k score systems over one shared trial-pair order (first set's order)."""

    pairs: tuple[tuple[str, str], ...]
    matrix: np.ndarray  # (k, n) float64

    @property
    def n_systems(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_trials(self) -> int:
        return self.matrix.shape[1]


def parse_trial_list(text: str) -> TrialList:
    """Parse ``enroll test`` or ``label enroll test`` lines (label 0/1)."""
    pairs: list[TrialPair] = []
    labeled: bool | None = None
    seen: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) == 2:
            if tokens[0] in ("0", "1"):
                raise ParseError(
                    "labeled line needs 3 tokens: 'label enroll test'", line=lineno
                )
            pair = TrialPair(tokens[0], tokens[1])
        elif len(tokens) == 3:
            if tokens[0] not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {tokens[0]!r}", line=lineno)
            pair = TrialPair(tokens[1], tokens[2], tokens[0] == "1")
        else:
            raise ParseError(f"expected 2 or 3 tokens, got {len(tokens)}", line=lineno)
        has_label = pair.label is not None
        if labeled is None:
            labeled = has_label
        elif has_label != labeled:
            raise ParseError("mixed labeled and unlabeled lines", line=lineno)
        key = (pair.enroll, pair.test)
        if key in seen:
            raise DuplicatePairError(
                f"line {lineno}: duplicate trial pair {pair.enroll} {pair.test}"
            )
        seen.add(key)
        pairs.append(pair)
    if not pairs:
        raise ParseError("no trial pairs found")
    return TrialList(pairs)


def write_trial_list(trials: TrialList) -> str:
    lines = []
    for p in trials:
        if p.label is None:
            lines.append(f"{p.enroll} {p.test}\n")
        else:
            lines.append(f"{int(p.label)} {p.enroll} {p.test}\n")
    return "".join(lines)


def parse_score_file(text: str) -> ScoreSet:
    """Parse ``enroll test score`` lines; scores must be finite reals."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) != 3:
            raise ParseError(
                f"expected 'enroll test score', got {len(tokens)} tokens", line=lineno
            )
        try:
            score = float(tokens[2])
        except ValueError:
            raise ParseError(f"non-numeric score {tokens[2]!r}", line=lineno) from None
        if not math.isfinite(score):
            raise ParseError(f"non-finite score {tokens[2]!r}", line=lineno)
        entries.append((tokens[0], tokens[1], score))
    if not entries:
        raise ParseError("no score entries found")
    return ScoreSet(entries)


def write_score_file(scores: ScoreSet) -> str:
    """One ``enroll test score`` line per entry; scores are rendered with
    repr so parse_score_file(write_score_file(s)) == s bit-exactly."""
    return "".join(f"{e} {t} {s!r}\n" for e, t, s in scores.entries)


def read_embeddings(data: str | bytes, fmt: str = "text") -> EmbeddingSet:
    if fmt == "text":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return _read_embeddings_text(data)
    if fmt == "binary":
        if not isinstance(data, (bytes, bytearray, memoryview)):
            raise DataError("binary embedding payload must be bytes")
        return _read_embeddings_binary(bytes(data))
    raise ValueError(f"unknown embedding format {fmt!r}")


def write_embeddings(emb: EmbeddingSet, fmt: str = "text") -> str | bytes:
    if fmt == "text":
        return _write_embeddings_text(emb)
    if fmt == "binary":
        return _write_embeddings_binary(emb)
    raise ValueError(f"unknown embedding format {fmt!r}")


def _read_embeddings_text(text: str) -> EmbeddingSet:
    segments: dict[str, list[np.ndarray]] = {}
    dim: int | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) < 2:
            raise ParseError("utterance id and at least one component required", line=lineno)
        utt = tokens[0]
        try:
            values = [float(t) for t in tokens[1:]]
        except ValueError:
            raise ParseError("non-numeric embedding component", line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite embedding component", line=lineno)
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ParseError(
                f"dimension mismatch: {len(values)} != {dim}", line=lineno
            )
        segments.setdefault(utt, []).append(np.array(values, dtype=np.float32))
    if not segments:
        raise ParseError("no embedding records found")
    return EmbeddingSet({u: np.stack(v) for u, v in segments.items()})


def _read_embeddings_binary(data: bytes) -> EmbeddingSet:
    if data[:4] != EMB_MAGIC:
        raise ParseError("bad magic bytes; not an EMB1 payload")
    offset = 4
    if len(data) < offset + 4:
        raise ParseError("truncated binary payload (missing record count)")
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    segments: dict[str, list[np.ndarray]] = {}
    dim: int | None = None
    for rec in range(count):
        if len(data) < offset + 2:
            raise ParseError(f"record {rec}: truncated binary payload")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if len(data) < offset + id_len + 4:
            raise ParseError(f"record {rec}: truncated binary payload")
        utt = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        (rec_dim,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if rec_dim == 0:
            raise ParseError(f"record {rec}: zero-dimension record")
        if dim is None:
            dim = rec_dim
        elif rec_dim != dim:
            raise ParseError(f"record {rec}: dimension mismatch: {rec_dim} != {dim}")
        end = offset + 4 * rec_dim
        if len(data) < end:
            raise ParseError(f"record {rec}: truncated binary payload")
        vec = np.frombuffer(data, dtype="<f4", count=rec_dim, offset=offset)
        offset = end
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"record {rec}: non-finite embedding component")
        segments.setdefault(utt, []).append(vec.astype(np.float32))
    if offset != len(data):
        raise ParseError("trailing bytes after last record")
    if not segments:
        raise ParseError("no embedding records found")
    return EmbeddingSet({u: np.stack(v) for u, v in segments.items()})


def _write_embeddings_text(emb: EmbeddingSet) -> str:
    lines = []
    for utt in emb.ids:
        for vec in emb[utt]:
            comps = " ".join(repr(float(v)) for v in vec)
            lines.append(f"{utt} {comps}\n")
    return "".join(lines)


def _write_embeddings_binary(emb: EmbeddingSet) -> bytes:
    out = bytearray(EMB_MAGIC)
    n_records = sum(emb[utt].shape[0] for utt in emb.ids)
    out += struct.pack("<I", n_records)
    for utt in emb.ids:
        utt_bytes = utt.encode("utf-8")
        if len(utt_bytes) > 0xFFFF:
            raise DataError(f"utterance id too long for binary format: {utt!r}")
        for vec in emb[utt]:
            out += struct.pack("<H", len(utt_bytes))
            out += utt_bytes
            out += struct.pack("<I", vec.shape[0])
            out += np.ascontiguousarray(vec, dtype="<f4").tobytes()
    return bytes(out)


def align_score_sets(sets: Sequence[ScoreSet]) -> AlignedScores:
    """Check that all sets cover exactly the same pairs and stack them into
    a (k, n) matrix ordered by the first set's pair order."""
    if not sets:
        raise DataError("need at least one score set")
    maps: list[dict[tuple[str, str], float]] = []
    for idx, s in enumerate(sets):
        table: dict[tuple[str, str], float] = {}
        for enroll, test, score in s.entries:
            key = (enroll, test)
            if key in table:
                raise DuplicatePairError(
                    f"score set {idx}: duplicate pair {enroll} {test}"
                )
            table[key] = score
        maps.append(table)
    ref_pairs = [(e, t) for e, t, _ in sets[0].entries]
    ref_keys = set(ref_pairs)
    for idx, table in enumerate(maps[1:], 1):
        missing = ref_keys - table.keys()
        if missing:
            enroll, test = min(missing)
            raise AlignmentError(f"score set {idx} is missing pair {enroll} {test}")
        extra = table.keys() - ref_keys
        if extra:
            enroll, test = min(extra)
            raise AlignmentError(f"score set {idx} has unknown pair {enroll} {test}")
    matrix = np.array(
        [[table[p] for p in ref_pairs] for table in maps], dtype=np.float64
    )
    return AlignedScores(pairs=tuple(ref_pairs), matrix=matrix)
