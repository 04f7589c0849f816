"""Tokens, entities, documents and corpora, plus IOB2 reading and writing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

TAG_RE = re.compile(r"^(?:O|[BI]-\S+)$")
_WS_RE = re.compile(r"\s")

DIRECTORY = "directory"
SINGLE_FILE = "file"
MODES = (DIRECTORY, SINGLE_FILE)


class IOB2ParseError(ValueError):
    """Malformed IOB2 line."""

    def __init__(self, message: str, line: int, source: str | None = None):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {message}")


class CorpusError(ValueError):
    """Reference and hypothesis sources cannot be paired."""


@dataclass(frozen=True)
class Token:
    text: str
    tag: str

    def __post_init__(self) -> None:
        if not self.text or _WS_RE.search(self.text):
            raise ValueError(f"token text must be non-empty without whitespace: {self.text!r}")
        if not TAG_RE.match(self.tag):
            raise ValueError(f"not an IOB2 tag: {self.tag!r}")

    @property
    def prefix(self) -> str:
        return self.tag[0]

    @property
    def category(self) -> str | None:
        return None if self.tag == "O" else self.tag[2:]


@dataclass(frozen=True)
class TaggedEntity:
    """A flat named entity: category plus space-joined transcription.

    ``start``/``end`` are token indices in the source document (end exclusive).
    They do not take part in equality, so entities from different documents
    with the same category and text compare equal.
    """

    category: str
    transcription: str
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("entity category must not be empty")

    @property
    def words(self) -> list[str]:
        return self.transcription.split()


@dataclass(frozen=True)
class EntitySequence:
    entities: tuple[TaggedEntity, ...] = ()
    # token indices where a stray I- tag had to open a new entity
    repairs: tuple[int, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self) -> Iterator[TaggedEntity]:
        return iter(self.entities)

    def __getitem__(self, i):
        return self.entities[i]

    @property
    def categories(self) -> set[str]:
        return {e.category for e in self.entities}

    def restrict(self, category: str) -> "EntitySequence":
        return EntitySequence(tuple(e for e in self.entities if e.category == category))


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple[Token, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def text(self) -> str:
        """Full transcription with tags stripped."""
        return " ".join(t.text for t in self.tokens)

    def entities(self) -> EntitySequence:
        return extract_entities(self)


@dataclass(frozen=True)
class DocumentPair:
    reference: Document
    hypothesis: Document

    def __post_init__(self) -> None:
        if self.reference.id != self.hypothesis.id:
            raise ValueError(
                f"document ids differ: {self.reference.id!r} != {self.hypothesis.id!r}"
            )

    @property
    def id(self) -> str:
        return self.reference.id


@dataclass(frozen=True)
class Corpus:
    pairs: tuple[DocumentPair, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        seen: set[str] = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise ValueError(f"duplicate document id {pair.id!r}")
            seen.add(pair.id)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[DocumentPair]:
        return iter(self.pairs)

    @classmethod
    def from_documents(
        cls, references: Iterable[Document], hypotheses: Iterable[Document]
    ) -> "Corpus":
        return cls(tuple(DocumentPair(r, h) for r, h in zip(references, hypotheses, strict=True)))


def _parse_line(line: str, lineno: int, source: str | None) -> Token:
    fields = line.split(" ")
    if len(fields) != 2:
        raise IOB2ParseError(f"expected 'token tag', got {len(fields)} field(s)", lineno, source)
    text, tag = fields
    if not text:
        raise IOB2ParseError("empty token", lineno, source)
    if _WS_RE.search(text):
        raise IOB2ParseError(f"whitespace inside token {text!r}", lineno, source)
    if not TAG_RE.match(tag):
        raise IOB2ParseError(f"invalid IOB2 tag {tag!r}", lineno, source)
    return Token(text, tag)


def _lines(content: str) -> list[str]:
    # splitlines() would also split on \x1c,   etc.; only LF/CRLF separate lines
    lines = content.split("\n")
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def parse_iob2(content: str, doc_id: str, source: str | None = None) -> Document:
    """Parse one document. Blank lines are ignored."""
    tokens = []
    for lineno, line in enumerate(_lines(content), start=1):
        if not line.strip():
            continue
        tokens.append(_parse_line(line, lineno, source))
    return Document(doc_id, tuple(tokens))


def parse_iob2_documents(content: str, source: str | None = None) -> list[Document]:
    """Parse a file of blank-line separated documents; ids are "0", "1", ..."""
    blocks: list[list[Token]] = []
    current: list[Token] = []
    for lineno, line in enumerate(_lines(content), start=1):
        if not line.strip():
            if current:
                blocks.append(current)
                current = []
            continue
        current.append(_parse_line(line, lineno, source))
    if current:
        blocks.append(current)
    return [Document(str(i), tuple(b)) for i, b in enumerate(blocks)]


def serialize_iob2(doc: Document) -> str:
    return "".join(f"{t.text} {t.tag}\n" for t in doc.tokens)


def serialize_iob2_documents(docs: Iterable[Document]) -> str:
    return "\n".join(serialize_iob2(d) for d in docs)


def extract_entities(doc: Document) -> EntitySequence:
    """Segment a document into entity blocks.

    B-X opens an entity, I-X extends an open entity of category X and O closes
    it. An I-X with no open X entity opens a new one (recorded in ``repairs``).
    """
    entities: list[TaggedEntity] = []
    repairs: list[int] = []
    cat: str | None = None
    start = 0
    words: list[str] = []

    def close(end: int) -> None:
        if cat is not None:
            entities.append(TaggedEntity(cat, " ".join(words), start, end))

    for i, tok in enumerate(doc.tokens):
        if tok.tag == "O":
            close(i)
            cat, words = None, []
            continue
        tcat = tok.tag[2:]
        if tok.prefix == "I" and tcat == cat:
            words.append(tok.text)
            continue
        if tok.prefix == "I":
            repairs.append(i)
        close(i)
        cat, start, words = tcat, i, [tok.text]
    close(len(doc.tokens))
    return EntitySequence(tuple(entities), tuple(repairs))


def entity_blocks(doc: Document) -> list[tuple[int, int]]:
    """Token index ranges (start, end) of each entity block, in order."""
    return [(e.start, e.end) for e in extract_entities(doc)]


def _read(path: Path) -> str:
    return path.read_bytes().decode("utf-8")


def _documents_in(directory: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file() or path.name.startswith("."):
            continue
        if path.stem in found:
            raise CorpusError(f"two files share the document id {path.stem!r} in {directory}")
        found[path.stem] = path
    return found


def load_documents(source: str | Path, mode: str = DIRECTORY) -> list[Document]:
    source = Path(source)
    if mode == DIRECTORY:
        if not source.is_dir():
            raise CorpusError(f"not a directory: {source}")
        return [
            parse_iob2(_read(p), stem, source=str(p)) for stem, p in _documents_in(source).items()
        ]
    if mode == SINGLE_FILE:
        if not source.is_file():
            raise CorpusError(f"not a file: {source}")
        return parse_iob2_documents(_read(source), source=str(source))
    raise ValueError(f"unknown input mode {mode!r}; expected one of {MODES}")


def load_corpus(reference_source: str | Path, hypothesis_source: str | Path, mode: str = DIRECTORY) -> Corpus:
    """Load and pair reference and hypothesis documents.

    Directory mode pairs files by filename stem; single-file mode pairs
    blank-line separated blocks by position.
    """
    refs = load_documents(reference_source, mode)
    hyps = load_documents(hypothesis_source, mode)
    if mode == SINGLE_FILE:
        if len(refs) != len(hyps):
            raise CorpusError(
                f"reference has {len(refs)} documents but hypothesis has {len(hyps)}"
            )
        return Corpus.from_documents(refs, hyps)

    by_id = {d.id: d for d in hyps}
    ref_ids = [d.id for d in refs]
    missing = sorted(set(ref_ids) - by_id.keys())
    extra = sorted(by_id.keys() - set(ref_ids))
    if missing or extra:
        parts = []
        if missing:
            parts.append("no hypothesis for: " + ", ".join(missing))
        if extra:
            parts.append("no reference for: " + ", ".join(extra))
        raise CorpusError("unmatched documents; " + "; ".join(parts))
    return Corpus(tuple(DocumentPair(r, by_id[r.id]) for r in refs))
