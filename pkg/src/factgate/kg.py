"""In-memory RDF triple store.

Holds an immutable, indexed set of (subject, predicate, object) triples
parsed from a flat N-Triples subset (no prefixes, no blank nodes, no
language tags). The store answers three questions: does a triple hold
(entailment, with tolerant numeric matching), which triples match a
pattern, and what lies within k hops of a set of seed entities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import IO, Iterable, Iterator

RDF_TYPE_IRI = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
XSD_STRING = "http://www.w3.org/2001/XMLSchema#string"
XSD_DECIMAL = "http://www.w3.org/2001/XMLSchema#decimal"
XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"

# Relative tolerance for numeric literal matching. Bound checks elsewhere
# use exact decimal comparison; only *equality* is tolerant.
NUMERIC_REL_TOL = Decimal("1e-9")

# xsd:decimal / xsd:integer lexical forms (no exponent, no NaN/Inf).
_DECIMAL_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)\Z")
_INTEGER_RE = re.compile(r"[+-]?\d+\Z")

_WHITESPACE_RE = re.compile(r"[ \t\r\n]")


class ParseError(Exception):
    """Raised on the first malformed N-Triples line; parsing is all-or-nothing."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class Datatype(str, Enum):
    STRING = "string"
    DECIMAL = "decimal"
    INTEGER = "integer"


@dataclass(frozen=True)
class Iri:
    """An absolute IRI. Equality is byte equality; no normalization."""

    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("IRI must be non-empty")
        if _WHITESPACE_RE.search(self.value):
            raise ValueError(f"IRI contains whitespace: {self.value!r}")


RDF_TYPE = Iri(RDF_TYPE_IRI)


@dataclass(frozen=True)
class Literal:
    """A typed literal value.

    `numeric` is the parsed decimal for DECIMAL/INTEGER literals and None
    for strings. It is derived from `lexical`, so equality and hashing use
    (lexical, datatype) only.
    """

    lexical: str
    datatype: Datatype = Datatype.STRING
    numeric: Decimal | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.datatype is Datatype.STRING:
            object.__setattr__(self, "numeric", None)
            return
        pattern = _INTEGER_RE if self.datatype is Datatype.INTEGER else _DECIMAL_RE
        if not pattern.match(self.lexical):
            raise ValueError(
                f"invalid {self.datatype.value} lexical form: {self.lexical!r}"
            )
        object.__setattr__(self, "numeric", Decimal(self.lexical))

    @property
    def is_numeric(self) -> bool:
        return self.numeric is not None


Term = Iri | Literal


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term


def numbers_close(a: Decimal, b: Decimal) -> bool:
    """Equality within NUMERIC_REL_TOL relative tolerance, in exact decimal
    arithmetic: |a - b| <= tol * max(|a|, |b|)."""
    if a == b:
        return True
    return abs(a - b) <= NUMERIC_REL_TOL * max(abs(a), abs(b))


def term_matches(graph_term: Term, query_term: Term) -> bool:
    """Term equality used by entailment and pattern matching.

    IRIs and string literals compare byte-equal; numeric literals compare
    on their decimal values within relative tolerance.
    """
    if isinstance(graph_term, Iri) or isinstance(query_term, Iri):
        return graph_term == query_term
    if graph_term.is_numeric and query_term.is_numeric:
        return numbers_close(graph_term.numeric, query_term.numeric)
    if graph_term.is_numeric or query_term.is_numeric:
        return False
    return graph_term.lexical == query_term.lexical


# --- N-Triples subset ---------------------------------------------------

_LINE_RE = re.compile(r"<([^<>]*)>\s+<([^<>]*)>\s+(.+?)\s*\.\s*$")
_LITERAL_OBJ_RE = re.compile(r'"((?:[^"\\]|\\.)*)"(?:\^\^<([^<>]*)>)?\Z')

_UNESCAPE = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}
_ESCAPE = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}

_DATATYPE_BY_IRI = {
    XSD_STRING: Datatype.STRING,
    XSD_DECIMAL: Datatype.DECIMAL,
    XSD_INTEGER: Datatype.INTEGER,
}
_DATATYPE_IRI = {v: k for k, v in _DATATYPE_BY_IRI.items()}


def _unescape(raw: str) -> str:
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in _UNESCAPE:
                raise ValueError(f"unsupported escape in literal: {raw!r}")
            out.append(_UNESCAPE[raw[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return "".join(_ESCAPE.get(ch, ch) for ch in text)


def _parse_object(token: str) -> Term:
    if token.startswith("<") and token.endswith(">"):
        return Iri(token[1:-1])
    m = _LITERAL_OBJ_RE.match(token)
    if m is None:
        raise ValueError(f"malformed object term: {token!r}")
    lexical = _unescape(m.group(1))
    dt_iri = m.group(2)
    if dt_iri is None:
        # Unsuffixed literals that look like decimals are stored as decimals;
        # the source data omits datatype suffixes on numeric values.
        if _DECIMAL_RE.match(lexical):
            return Literal(lexical, Datatype.DECIMAL)
        return Literal(lexical, Datatype.STRING)
    datatype = _DATATYPE_BY_IRI.get(dt_iri)
    if datatype is None:
        raise ValueError(f"unsupported datatype: <{dt_iri}>")
    return Literal(lexical, datatype)


def parse_ntriples_line(line: str) -> Triple:
    """Parse one `<s> <p> o .` line. Raises ValueError on malformed input."""
    m = _LINE_RE.match(line.strip())
    if m is None:
        raise ValueError("expected `<subject> <predicate> object .`")
    return Triple(Iri(m.group(1)), Iri(m.group(2)), _parse_object(m.group(3)))


def parse_ntriples(source: str | IO[str]) -> "Graph":
    """Parse N-Triples text into a Graph.

    Blank lines and `#` comment lines are skipped; duplicate triples are
    deduplicated. Any malformed line aborts the whole parse with a
    ParseError carrying its line number.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    triples: list[Triple] = []
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            triples.append(parse_ntriples_line(stripped))
        except ValueError as exc:
            raise ParseError(number, str(exc)) from exc
    return Graph.from_triples(triples)


def term_to_ntriples(term: Term) -> str:
    """Serialize one term to its N-Triples form.

    Integer literals keep an explicit datatype suffix, and numeric-looking
    strings get one, so that re-parsing recovers the same datatype.
    """
    if isinstance(term, Iri):
        return f"<{term.value}>"
    quoted = f'"{_escape(term.lexical)}"'
    if term.datatype is Datatype.INTEGER:
        return f"{quoted}^^<{XSD_INTEGER}>"
    if term.datatype is Datatype.STRING and _DECIMAL_RE.match(term.lexical):
        return f"{quoted}^^<{XSD_STRING}>"
    return quoted


def triple_to_ntriples(triple: Triple) -> str:
    return (
        f"<{triple.subject.value}> <{triple.predicate.value}> "
        f"{term_to_ntriples(triple.object)} ."
    )


def triple_sort_key(triple: Triple) -> tuple[str, str, str]:
    return (
        triple.subject.value,
        triple.predicate.value,
        term_to_ntriples(triple.object),
    )


def serialize_ntriples(graph: "Graph") -> str:
    """Serialize a Graph as sorted N-Triples, one triple per line."""
    lines = [triple_to_ntriples(t) for t in graph]
    return "\n".join(lines) + ("\n" if lines else "")


# --- the store ----------------------------------------------------------


class Graph:
    """Immutable indexed triple set.

    Triples are held in sorted order; SPO/POS/OSP indexes back the pattern
    lookups. All query results are deterministic (sorted) and every lookup
    is equivalent to a linear scan over the triple set.
    """

    __slots__ = ("_triples", "_spo", "_pos", "_osp", "_by_node")

    def __init__(self, triples: Iterable[Triple] = ()):
        ordered = sorted(set(triples), key=triple_sort_key)
        self._triples: tuple[Triple, ...] = tuple(ordered)
        spo: dict[str, dict[str, list[Triple]]] = {}
        pos: dict[str, dict[str, list[Triple]]] = {}
        osp: dict[str, dict[str, list[Triple]]] = {}
        by_node: dict[str, list[Triple]] = {}
        for t in self._triples:
            s, p = t.subject.value, t.predicate.value
            o = term_to_ntriples(t.object)
            spo.setdefault(s, {}).setdefault(p, []).append(t)
            pos.setdefault(p, {}).setdefault(o, []).append(t)
            osp.setdefault(o, {}).setdefault(s, []).append(t)
            by_node.setdefault(s, []).append(t)
            if isinstance(t.object, Iri) and t.object.value != s:
                by_node.setdefault(t.object.value, []).append(t)
        self._spo = spo
        self._pos = pos
        self._osp = osp
        self._by_node = by_node

    @classmethod
    def from_triples(cls, triples: Iterable[Triple]) -> "Graph":
        return cls(triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples)"

    @property
    def triples(self) -> tuple[Triple, ...]:
        return self._triples

    def subjects(self) -> set[Iri]:
        return {t.subject for t in self._triples}

    def predicates(self) -> set[Iri]:
        return {t.predicate for t in self._triples}

    def nodes(self) -> set[str]:
        """IRI strings appearing in subject or object position."""
        return set(self._by_node)

    def stats_line(self) -> str:
        return (
            f"triples={len(self._triples)} "
            f"subjects={len(self.subjects())} "
            f"predicates={len(self.predicates())}"
        )

    def _candidates(
        self, s: Iri | None, p: Iri | None, o: Term | None
    ) -> Iterable[Triple]:
        if s is not None:
            by_p = self._spo.get(s.value)
            if by_p is None:
                return ()
            if p is not None:
                return by_p.get(p.value, ())
            return (t for ts in by_p.values() for t in ts)
        if p is not None:
            by_o = self._pos.get(p.value)
            if by_o is None:
                return ()
            if o is not None and not (isinstance(o, Literal) and o.is_numeric):
                # Exact object keys suffice for IRIs and string literals;
                # numeric objects need the tolerant filter below.
                return by_o.get(term_to_ntriples(o), ())
            return (t for ts in by_o.values() for t in ts)
        if o is not None and not (isinstance(o, Literal) and o.is_numeric):
            by_s = self._osp.get(term_to_ntriples(o))
            if by_s is None:
                return ()
            return (t for ts in by_s.values() for t in ts)
        return self._triples

    def match(
        self,
        s: Iri | None = None,
        p: Iri | None = None,
        o: Term | None = None,
    ) -> list[Triple]:
        """All triples matching the bound positions, in sorted order.

        Subject and predicate match byte-equal; a bound object matches per
        term_matches (tolerant for numeric literals).
        """
        out = [
            t
            for t in self._candidates(s, p, o)
            if (s is None or t.subject == s)
            and (p is None or t.predicate == p)
            and (o is None or term_matches(t.object, o))
        ]
        out.sort(key=triple_sort_key)
        return out

    def find_supporting(self, triple: Triple) -> Triple | None:
        """The first stored triple entailing `triple`, or None."""
        hits = self.match(triple.subject, triple.predicate, triple.object)
        return hits[0] if hits else None

    def contains(self, triple: Triple) -> bool:
        """Entailment check: membership with tolerant numeric matching."""
        return self.find_supporting(triple) is not None

    def incident(self, node: str) -> list[Triple]:
        """Triples whose subject or IRI object is the given node."""
        return self._by_node.get(node, [])


def retrieve_subgraph(graph: Graph, seeds: Iterable[Iri], max_hops: int) -> Graph:
    """Breadth-first subgraph expansion from seed entities.

    Hop 1 collects all triples incident to a seed; each later hop expands
    from IRI terms newly reached in the previous one. Literal objects are
    never expanded. Returns the collected triples as a new Graph.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    frontier = {seed.value for seed in seeds}
    visited = set(frontier)
    collected: set[Triple] = set()
    for _ in range(max_hops):
        if not frontier:
            break
        reached: set[str] = set()
        for node in frontier:
            for t in graph.incident(node):
                if t in collected:
                    continue
                collected.add(t)
                reached.add(t.subject.value)
                if isinstance(t.object, Iri):
                    reached.add(t.object.value)
        frontier = reached - visited
        visited |= frontier
    return Graph.from_triples(collected)


def parse_decimal(text: str) -> Decimal:
    """Strict decimal parse (xsd:decimal lexical space, no exponent)."""
    if not _DECIMAL_RE.match(text):
        raise ValueError(f"not a plain decimal: {text!r}")
    try:
        return Decimal(text)
    except InvalidOperation as exc:  # pragma: no cover - regex precludes this
        raise ValueError(f"not a plain decimal: {text!r}") from exc


def decimal_lexical(value: Decimal) -> str:
    """Fixed-point lexical form of a decimal (never exponent notation)."""
    return format(value, "f")
