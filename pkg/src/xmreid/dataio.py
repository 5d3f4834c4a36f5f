"""Bit-exact text formats and loaders.

Five line-oriented formats cover everything the pipeline exchanges on disk:

  FEAT    ``XMREID-FEAT 1`` / ``<N> <D>`` / N lines ``id<TAB>view<TAB>v1 v2 ..``
  CORPUS  ``XMREID-CORPUS 1`` / lines ``id<TAB>view<TAB>raw description text``
  EMB     ``<V> <E>`` / V lines ``token v1 .. vE`` (word2vec text style)
  ATTR    ``XMREID-ATTR 1 <B>`` / lines ``id<TAB>b1b2..bB`` with bits in {0,1}
  SPLIT   ``XMREID-SPLIT 1 <num_splits>`` / lines ``index<TAB>id<TAB>train|test``

All files are UTF-8 with LF line endings; fields are separated by single
tabs, vector components by single spaces, and reals carry 17 significant
digits so that save -> load -> save is byte-identical.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateAssignment,
    DuplicateToken,
    MalformedHeader,
    MisalignedRecords,
    NonFiniteValue,
    RaggedAttributes,
    UnknownIdentity,
)

FEAT_MAGIC = "XMREID-FEAT 1"
CORPUS_MAGIC = "XMREID-CORPUS 1"
ATTR_MAGIC = "XMREID-ATTR 1"
SPLIT_MAGIC = "XMREID-SPLIT 1"

TRAIN = "train"
TEST = "test"


def format_real(x) -> str:
    """Canonical 17-significant-digit rendering; round-trips float64 exactly."""
    return format(float(x), ".17g")


def _read_lines(path):
    with open(path, "r", encoding="utf-8", newline="\n") as handle:
        return handle.read().split("\n")


def _parse_view(token, path):
    if token not in ("1", "2"):
        raise MalformedHeader(f"{path}: view must be 1 or 2, got {token!r}")
    return int(token)


def _parse_vector(text, dim, path, lineno):
    parts = text.split(" ")
    if len(parts) != dim:
        raise DimensionMismatch(
            f"{path}:{lineno}: expected {dim} components, got {len(parts)}"
        )
    try:
        values = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise MalformedHeader(f"{path}:{lineno}: unparseable real: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{path}:{lineno}: non-finite vector component")
    return values


# -- FEAT ----------------------------------------------------------------------

def load_features(path):
    """Parse a FEAT file into a list of (identity, view, vector) records."""
    lines = _read_lines(path)
    if not lines or lines[0] != FEAT_MAGIC:
        raise MalformedHeader(f"{path}: expected '{FEAT_MAGIC}' on line 1")
    try:
        count_s, dim_s = lines[1].split(" ")
        count, dim = int(count_s), int(dim_s)
    except (IndexError, ValueError) as exc:
        raise MalformedHeader(f"{path}: bad count/dimension line") from exc
    if count < 0 or dim < 1:
        raise MalformedHeader(f"{path}: invalid counts {count} x {dim}")
    body = [line for line in lines[2:] if line != ""]
    if len(body) != count:
        raise MalformedHeader(f"{path}: header says {count} records, body has {len(body)}")
    records = []
    for offset, line in enumerate(body):
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedHeader(f"{path}:{offset + 3}: expected 3 tab-separated fields")
        identity, view_s, vector_s = fields
        view = _parse_view(view_s, path)
        vector = _parse_vector(vector_s, dim, path, offset + 3)
        records.append((identity, view, vector))
    return records


def save_features(records, path):
    """Write (identity, view, vector) records in canonical FEAT form."""
    records = list(records)
    dim = len(records[0][2]) if records else 0
    rows = []
    for identity, view, vector in records:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (dim,):
            raise DimensionMismatch(f"record {identity!r} has dimension {vector.shape}")
        if not np.all(np.isfinite(vector)):
            raise NonFiniteValue(f"record {identity!r} has a non-finite component")
        if view not in (1, 2):
            raise MalformedHeader(f"record {identity!r} has view {view}")
        body = " ".join(format_real(v) for v in vector)
        rows.append(f"{identity}\t{view}\t{body}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{FEAT_MAGIC}\n{len(records)} {dim}\n")
        for row in rows:
            handle.write(row + "\n")


# -- CORPUS --------------------------------------------------------------------

def load_corpus(path):
    """Parse a CORPUS file into (identity, view, raw text) records."""
    lines = _read_lines(path)
    if not lines or lines[0] != CORPUS_MAGIC:
        raise MalformedHeader(f"{path}: expected '{CORPUS_MAGIC}' on line 1")
    records = []
    for offset, line in enumerate(lines[1:]):
        if line == "":
            continue
        fields = line.split("\t", 2)
        if len(fields) != 3:
            raise MalformedHeader(f"{path}:{offset + 2}: expected 3 tab-separated fields")
        identity, view_s, text = fields
        records.append((identity, _parse_view(view_s, path), text))
    return records


def save_corpus(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(CORPUS_MAGIC + "\n")
        for identity, view, text in records:
            if "\n" in text or "\t" in identity:
                raise MalformedHeader(f"record {identity!r}: text/identity not serializable")
            handle.write(f"{identity}\t{view}\t{text}\n")


# -- EMB -----------------------------------------------------------------------

@dataclass
class EmbeddingTable:
    """Token -> fixed-dimension vector lookup."""

    dimension: int
    vectors: dict = field(default_factory=dict)

    def __contains__(self, token):
        return token in self.vectors

    def __len__(self):
        return len(self.vectors)

    def get(self, token):
        return self.vectors[token]


def load_embeddings(path) -> EmbeddingTable:
    lines = _read_lines(path)
    try:
        count_s, dim_s = lines[0].split(" ")
        count, dim = int(count_s), int(dim_s)
    except (IndexError, ValueError) as exc:
        raise MalformedHeader(f"{path}: bad vocabulary/dimension line") from exc
    if count < 0 or dim < 1:
        raise MalformedHeader(f"{path}: invalid counts {count} x {dim}")
    body = [line for line in lines[1:] if line != ""]
    if len(body) != count:
        raise MalformedHeader(f"{path}: header says {count} tokens, body has {len(body)}")
    table = EmbeddingTable(dimension=dim)
    for offset, line in enumerate(body):
        token, _, rest = line.partition(" ")
        if token in table.vectors:
            raise DuplicateToken(f"{path}:{offset + 2}: token {token!r} repeated")
        table.vectors[token] = _parse_vector(rest, dim, path, offset + 2)
    return table


def save_embeddings(table: EmbeddingTable, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{len(table.vectors)} {table.dimension}\n")
        for token, vector in table.vectors.items():
            body = " ".join(format_real(v) for v in vector)
            handle.write(f"{token} {body}\n")


# -- ATTR ----------------------------------------------------------------------

@dataclass
class AttributeTable:
    """Per-identity binary attribute annotations of a common width."""

    width: int
    bits: dict = field(default_factory=dict)

    def __contains__(self, identity):
        return identity in self.bits

    def get(self, identity):
        return self.bits[identity]


def load_attributes(path, known_identities=None) -> AttributeTable:
    lines = _read_lines(path)
    head = lines[0].split(" ") if lines else []
    if len(head) != 3 or " ".join(head[:2]) != ATTR_MAGIC:
        raise MalformedHeader(f"{path}: expected '{ATTR_MAGIC} <B>' on line 1")
    try:
        width = int(head[2])
    except ValueError as exc:
        raise MalformedHeader(f"{path}: bad attribute width") from exc
    if width < 1:
        raise MalformedHeader(f"{path}: attribute width must be >= 1")
    table = AttributeTable(width=width)
    for offset, line in enumerate(lines[1:]):
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedHeader(f"{path}:{offset + 2}: expected 2 tab-separated fields")
        identity, bit_s = fields
        if len(bit_s) != width:
            raise RaggedAttributes(
                f"{path}:{offset + 2}: row has {len(bit_s)} bits, header says {width}"
            )
        if any(c not in "01" for c in bit_s):
            raise MalformedHeader(f"{path}:{offset + 2}: bits must be 0 or 1")
        if identity in table.bits:
            raise DuplicateAssignment(f"{path}:{offset + 2}: identity {identity!r} repeated")
        if known_identities is not None and identity not in known_identities:
            raise UnknownIdentity(f"{path}:{offset + 2}: identity {identity!r} unknown")
        table.bits[identity] = np.array([int(c) for c in bit_s], dtype=np.uint8)
    return table


def save_attributes(table: AttributeTable, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{ATTR_MAGIC} {table.width}\n")
        for identity, bits in table.bits.items():
            handle.write(f"{identity}\t{''.join(str(int(b)) for b in bits)}\n")


# -- SPLIT ---------------------------------------------------------------------

@dataclass
class SplitAssignment:
    """One train/test partition: every listed identity has exactly one role."""

    index: int
    roles: dict = field(default_factory=dict)

    def train_identities(self):
        return [i for i, role in self.roles.items() if role == TRAIN]

    def test_identities(self):
        return [i for i, role in self.roles.items() if role == TEST]


def load_splits(path, known_identities=None):
    lines = _read_lines(path)
    head = lines[0].split(" ") if lines else []
    if len(head) != 3 or " ".join(head[:2]) != SPLIT_MAGIC:
        raise MalformedHeader(f"{path}: expected '{SPLIT_MAGIC} <num_splits>' on line 1")
    try:
        declared = int(head[2])
    except ValueError as exc:
        raise MalformedHeader(f"{path}: bad split count") from exc
    by_index = {}
    for offset, line in enumerate(lines[1:]):
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedHeader(f"{path}:{offset + 2}: expected 3 tab-separated fields")
        index_s, identity, role = fields
        try:
            index = int(index_s)
        except ValueError as exc:
            raise MalformedHeader(f"{path}:{offset + 2}: bad split index") from exc
        if role not in (TRAIN, TEST):
            raise MalformedHeader(f"{path}:{offset + 2}: role must be train or test")
        if known_identities is not None and identity not in known_identities:
            raise UnknownIdentity(f"{path}:{offset + 2}: identity {identity!r} unknown")
        split = by_index.setdefault(index, SplitAssignment(index=index))
        if identity in split.roles:
            raise DuplicateAssignment(
                f"{path}:{offset + 2}: identity {identity!r} assigned twice in split {index}"
            )
        split.roles[identity] = role
    splits = [by_index[i] for i in sorted(by_index)]
    if len(splits) != declared:
        raise MalformedHeader(f"{path}: header says {declared} splits, body has {len(splits)}")
    return splits


def save_splits(splits, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{SPLIT_MAGIC} {len(splits)}\n")
        for split in splits:
            for identity, role in split.roles.items():
                handle.write(f"{split.index}\t{identity}\t{role}\n")


# -- synonym maps ----------------------------------------------------------------

def load_synonyms(path):
    """Parse ``token<TAB>syn1,syn2,..`` lines into a ranked synonym map."""
    synonyms = {}
    for offset, line in enumerate(_read_lines(path)):
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[1]:
            raise MalformedHeader(f"{path}:{offset + 1}: expected 'token<TAB>syn1,syn2,..'")
        token, ranked_s = fields
        if token in synonyms:
            raise DuplicateToken(f"{path}:{offset + 1}: token {token!r} repeated")
        ranked = tuple(ranked_s.split(","))
        if len(set(ranked)) != len(ranked) or any(not s for s in ranked):
            raise MalformedHeader(f"{path}:{offset + 1}: ranked list must be non-empty and duplicate-free")
        synonyms[token] = ranked
    return synonyms


def save_synonyms(synonyms, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for token, ranked in synonyms.items():
            handle.write(f"{token}\t{','.join(ranked)}\n")


# -- dataset assembly -------------------------------------------------------------

@dataclass
class DatasetRecord:
    """One observation of one identity in one camera view.

    Vision and language features are the ingested per-sample vectors
    (x and y); tokens are the raw description words; attributes are the
    identity's binary annotation as seen by this record.
    """

    identity: str
    view: int
    vision: np.ndarray | None = None
    language: np.ndarray | None = None
    tokens: tuple | None = None
    attributes: np.ndarray | None = None


@dataclass
class Dataset:
    records: list

    def identities(self):
        seen = {}
        for rec in self.records:
            seen.setdefault(rec.identity, None)
        return list(seen)

    def __len__(self):
        return len(self.records)


def assemble_dataset(vision=None, language=None, attributes=None, corpus=None) -> Dataset:
    """Join per-modality files into aligned records.

    When both vision and language feature lists are given they must carry the
    same (identity, view) sequence row by row; that row order is the pairing.
    Attribute bits are looked up per identity; token lists attach to the
    first matching (identity, view) record.
    """
    base = vision if vision is not None else language
    if base is None:
        raise MisalignedRecords("need at least one of vision or language features")
    if vision is not None and language is not None:
        if len(vision) != len(language):
            raise MisalignedRecords(
                f"vision has {len(vision)} records, language has {len(language)}"
            )
        for (vid, vview, _), (lid, lview, _) in zip(vision, language):
            if vid != lid or vview != lview:
                raise MisalignedRecords(
                    f"row pairing broken at identity {vid!r}/{lid!r} view {vview}/{lview}"
                )
    token_lookup = {}
    if corpus is not None:
        for identity, view, text in corpus:
            token_lookup.setdefault((identity, view), text)
    records = []
    for row, (identity, view, vector) in enumerate(base):
        rec = DatasetRecord(identity=identity, view=view)
        if vision is not None:
            rec.vision = vector
        if language is not None:
            rec.language = language[row][2]
        if attributes is not None:
            if identity not in attributes:
                raise UnknownIdentity(f"identity {identity!r} has no attribute row")
            rec.attributes = attributes.get(identity)
        records.append(rec)
    return Dataset(records=records)
