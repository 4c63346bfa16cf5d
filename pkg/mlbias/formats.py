# ========================================================================
#
# Imports
#
# ========================================================================
from functools import reduce
from math import gcd

from mlbias.groups import FinAbGroup
from mlbias.maps import MultiAffine, MultiMapG, MultiMapT
from mlbias.scalars import TorusValue
from mlbias.structure import CertificateTerm, RankCertificate
from mlbias.utilities import InputError, MlmapSyntaxError, format_subset

MLMAP_VERSION = 1
MLCERT_VERSION = 1


# ========================================================================
#
# Classes
#
# ========================================================================
class MlmapDocument:
    """A parsed MLMAP file: arity, groups, codomain and sparse entries.

    :param k: arity
    :type k: int
    :param groups: the groups A_1, ..., A_k
    :type groups: list
    :param codomain: target group, or None for the torus
    :type codomain: FinAbGroup
    :param entries: {0-based generator index: value} of a multilinear map
    :type entries: dict
    :param terms: {0-based subset I: entries} of a multiaffine map
    :type terms: dict
    """

    def __init__(self, k, groups, codomain=None, entries=None, terms=None):
        self.version = MLMAP_VERSION
        self.k = k
        self.groups = list(groups)
        self.codomain = codomain
        self.entries = dict(entries or {})
        self.terms = None if terms is None else {tuple(I): dict(e) for I, e in terms.items()}

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        return f"""MlmapDocument(k={self.k}, kind={self.kind})"""

    def __eq__(self, other):
        return (
            isinstance(other, MlmapDocument)
            and self.k == other.k
            and self.groups == other.groups
            and self.codomain == other.codomain
            and self.entries == other.entries
            and self.terms == other.terms
        )

    @property
    def kind(self):
        if self.terms is not None:
            return "affine"
        return "torus" if self.codomain is None else "group"

    def to_map(self):
        if self.kind == "affine":
            terms = {
                I: MultiMapT.from_entries([self.groups[i] for i in I], entries)
                for I, entries in self.terms.items()
            }
            return MultiAffine(self.groups, terms)
        if self.kind == "torus":
            return MultiMapT.from_entries(self.groups, self.entries)
        phi = MultiMapG(self.groups, self.codomain)
        coefs = phi.coefs.copy()
        for index, value in self.entries.items():
            coefs[tuple(index)] = value
        return MultiMapG(self.groups, self.codomain, coefs)

    @classmethod
    def from_map(cls, phi):
        """Canonical document of a map: nonzero entries only, reduced values"""
        if isinstance(phi, MultiAffine):
            terms = {I: _torus_entries(phi.terms[I]) for I in sorted(phi.terms, key=_term_key)}
            return cls(phi.k, phi.domains, None, terms=terms)
        if isinstance(phi, MultiMapT):
            return cls(phi.k, phi.domains, None, _torus_entries(phi))
        entries = {index: x.coords for index, x in phi.entries().items()}
        return cls(phi.k, phi.domains, phi.codomain, entries)


# ========================================================================
class CertificateDocument:
    """A parsed MLCERT file: the arity and the list of terms"""

    def __init__(self, k, terms):
        self.version = MLCERT_VERSION
        self.k = k
        self.terms = list(terms)

    def __repr__(self):
        return f"CertificateDocument(k={self.k}, rank={len(self.terms)})"

    def to_certificate(self, domains=None):
        """The certificate on the given domains (taken from the terms if omitted)"""
        if domains is None:
            if not self.terms:
                raise InputError("an empty certificate needs the domains of its map")
            domains = self.terms[0].domains
        if len(domains) != self.k:
            raise InputError(f"certificate has arity {self.k}, the map has {len(domains)}")
        return RankCertificate(self.terms, domains)


# ========================================================================
#
# Functions
#
# ========================================================================
def _term_key(I):
    return (len(I), I)


# ========================================================================
def _torus_entries(phi):
    return {index: value for index, value in sorted(phi.entries().items())}


# ========================================================================
def _tokens(text, start=1):
    """Non-blank lines without comments as (line number, raw line, tokens)"""
    lines = []
    for n, raw in enumerate(text.splitlines(), start=start):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if tokens:
            lines.append((n, raw, tokens))
    return lines


# ========================================================================
def _column(raw, tokens, t):
    """1-based column of the t-th token of a line"""
    position = 0
    for j in range(t + 1):
        position = raw.index(tokens[j], position)
        if j < t:
            position += len(tokens[j])
    return position + 1


# ========================================================================
def _integer(line, t, what):
    n, raw, tokens = line
    try:
        return int(tokens[t])
    except (ValueError, IndexError):
        column = _column(raw, tokens, t) if t < len(tokens) else None
        raise MlmapSyntaxError(f"expected {what}", n, column)


# ========================================================================
def _expect(line, keyword, count=None):
    n, raw, tokens = line
    if tokens[0] != keyword:
        raise MlmapSyntaxError(f"expected '{keyword}', found '{tokens[0]}'", n, _column(raw, tokens, 0))
    if count is not None and len(tokens) != count:
        raise MlmapSyntaxError(f"'{keyword}' takes {count - 1} argument(s)", n, 1)


# ========================================================================
def _group(line, t, what):
    n, raw, tokens = line
    orders = [_integer(line, j, "a cyclic order") for j in range(t, len(tokens))]
    try:
        return FinAbGroup(orders)
    except InputError as err:
        raise MlmapSyntaxError(f"{what}: {err}", n, _column(raw, tokens, t) if orders else None)


# ========================================================================
def _group_value(line, t, B):
    n, raw, tokens = line
    text = "".join(tokens[t:])
    column = _column(raw, tokens, t)
    if text.startswith("(") and text.endswith(")"):
        parts = [s for s in text[1:-1].split(",") if s]
    else:
        parts = [text]
    try:
        coords = tuple(int(s) for s in parts)
    except ValueError:
        raise MlmapSyntaxError(f"'{text}' is not a coordinate tuple", n, column)
    if len(coords) != B.rank:
        raise MlmapSyntaxError(
            f"value has {len(coords)} coordinates, the codomain has {B.rank}", n, column
        )
    return tuple(c % b for c, b in zip(coords, B.factors))


# ========================================================================
def _entry(line, groups, codomain):
    """Parse 'entry j_1 ... j_m value' against the groups of the entry's axes"""
    n, raw, tokens = line
    m = len(groups)
    if codomain is None and len(tokens) != m + 2:
        raise MlmapSyntaxError(f"an entry needs {m} indices and one value", n, 1)
    if codomain is not None and len(tokens) < m + 2:
        raise MlmapSyntaxError(f"an entry needs {m} indices and one value", n, 1)

    index = []
    for t, A in enumerate(groups, start=1):
        j = _integer(line, t, "a generator index")
        if not 1 <= j <= A.rank:
            raise MlmapSyntaxError(
                f"generator index {j} outside 1..{A.rank}", n, _column(raw, tokens, t)
            )
        index.append(j - 1)
    index = tuple(index)
    g = reduce(gcd, (A.factors[j] for A, j in zip(groups, index)), 0)

    column = _column(raw, tokens, m + 1)
    if codomain is None:
        try:
            value = TorusValue.parse(tokens[m + 1])
        except InputError as err:
            raise MlmapSyntaxError(str(err), n, column)
        if (value.to_fraction() * g).denominator != 1:
            raise MlmapSyntaxError(
                f"entry value {value} is not killed by the generator orders (gcd {g})",
                n,
                column,
            )
        return index, value

    value = _group_value(line, m + 1, codomain)
    for c, b in zip(value, codomain.factors):
        if (c * g) % b:
            raise MlmapSyntaxError(
                f"entry value {value} is not killed by the generator orders (gcd {g})",
                n,
                column,
            )
    return index, value


# ========================================================================
def _parse_block(lines):
    """Parse the lines of one MLMAP document (comments already removed)"""
    if not lines:
        raise MlmapSyntaxError("empty document", 1)
    _expect(lines[0], "mlmap", 2)
    version = _integer(lines[0], 1, "a version number")
    if version != MLMAP_VERSION:
        raise MlmapSyntaxError(f"unsupported mlmap version {version}", lines[0][0], 7)
    if len(lines) < 2:
        raise MlmapSyntaxError("missing 'k' line", lines[0][0])
    _expect(lines[1], "k", 2)
    k = _integer(lines[1], 1, "the arity")
    if k < 1:
        raise MlmapSyntaxError(f"arity must be positive, got {k}", lines[1][0], 3)

    groups = [None] * k
    pos = 2
    while pos < len(lines) and lines[pos][2][0] == "group":
        line = lines[pos]
        i = _integer(line, 1, "an axis number")
        if not 1 <= i <= k:
            raise MlmapSyntaxError(f"axis {i} outside 1..{k}", line[0], _column(line[1], line[2], 1))
        if groups[i - 1] is not None:
            raise MlmapSyntaxError(f"axis {i} declared twice", line[0], _column(line[1], line[2], 1))
        groups[i - 1] = _group(line, 2, f"group {i}")
        pos += 1
    missing = [i + 1 for i, A in enumerate(groups) if A is None]
    if missing:
        n = lines[pos][0] if pos < len(lines) else lines[-1][0]
        raise MlmapSyntaxError(f"no group declared for axis {missing[0]}", n)

    if pos >= len(lines):
        raise MlmapSyntaxError("missing 'codomain' line", lines[-1][0])
    line = lines[pos]
    _expect(line, "codomain")
    if line[2][1:] == ["T"]:
        codomain = None
    elif len(line[2]) >= 2 and line[2][1] == "group":
        codomain = _group(line, 2, "codomain")
    else:
        raise MlmapSyntaxError("codomain must be 'T' or 'group <orders>'", line[0], 10)
    pos += 1

    entries = {}
    terms = None
    current = entries
    axes = tuple(range(k))
    for line in lines[pos:]:
        n, raw, tokens = line
        if tokens[0] == "term":
            if codomain is not None:
                raise MlmapSyntaxError("multiaffine maps take values in T", n, 1)
            if terms is None:
                if entries:
                    raise MlmapSyntaxError("entries before the first 'term' header", n, 1)
                terms = {}
            if len(tokens) != 2:
                raise MlmapSyntaxError("'term' takes one comma-separated subset", n, 1)
            try:
                axes = tuple(sorted(int(s) - 1 for s in tokens[1].split(",")))
            except ValueError:
                raise MlmapSyntaxError(f"'{tokens[1]}' is not a subset", n, 6)
            if len(set(axes)) != len(axes) or axes[0] < 0 or axes[-1] >= k:
                raise MlmapSyntaxError(f"subset {tokens[1]} is not inside 1..{k}", n, 6)
            if axes in terms:
                raise MlmapSyntaxError(f"term {tokens[1]} declared twice", n, 6)
            current = terms[axes] = {}
        elif tokens[0] == "entry":
            index, value = _entry(line, [groups[i] for i in axes], codomain)
            if index in current:
                raise MlmapSyntaxError(f"duplicate entry at {' '.join(tokens[1:len(axes) + 1])}", n, 1)
            current[index] = value
        else:
            raise MlmapSyntaxError(f"unknown keyword '{tokens[0]}'", n, _column(raw, tokens, 0))

    return MlmapDocument(k, groups, codomain, entries, terms)


# ========================================================================
def parse_mlmap(text):
    """Parse an MLMAP v1 document.

    :param text: document text
    :type text: str
    :returns: the document; unspecified entries are zero
    :rtype: MlmapDocument
    """
    return _parse_block(_tokens(text))


# ========================================================================
def _value_text(value):
    if isinstance(value, TorusValue):
        return str(value)
    return "(" + ",".join(str(c) for c in value) + ")"


# ========================================================================
def _emit_entries(entries):
    lines = []
    for index in sorted(entries):
        value = entries[index]
        if isinstance(value, TorusValue) and value.is_zero():
            continue
        if not isinstance(value, TorusValue) and not any(value):
            continue
        indices = " ".join(str(j + 1) for j in index)
        lines.append(f"entry {indices} {_value_text(value)}")
    return lines


# ========================================================================
def emit_mlmap(doc):
    """Canonical MLMAP text: sorted entries, reduced values, no zero entries"""
    lines = [f"mlmap {MLMAP_VERSION}", f"k {doc.k}"]
    for i, A in enumerate(doc.groups):
        lines.append(" ".join(["group", str(i + 1)] + [str(f) for f in A.factors]))
    if doc.codomain is None:
        lines.append("codomain T")
    else:
        lines.append(" ".join(["codomain", "group"] + [str(b) for b in doc.codomain.factors]))
    if doc.terms is not None:
        for I in sorted(doc.terms, key=_term_key):
            body = _emit_entries(doc.terms[I])
            if body:
                lines.append(f"term {format_subset(I)}")
                lines.extend(body)
    else:
        lines.extend(_emit_entries(doc.entries))
    return "\n".join(lines) + "\n"


# ========================================================================
def _certificate_factor(lines, pos, keyword):
    """The embedded MLMAP block after a 'left' or 'right' line, and the next position"""
    if pos >= len(lines):
        raise MlmapSyntaxError(f"missing '{keyword}' block", lines[-1][0])
    _expect(lines[pos], keyword, 1)
    start = pos + 1
    end = start
    while end < len(lines) and lines[end][2][0] != "end":
        end += 1
    if end >= len(lines):
        raise MlmapSyntaxError(f"'{keyword}' block is not closed by 'end'", lines[pos][0])
    doc = _parse_block(lines[start:end])
    if doc.kind != "group":
        raise MlmapSyntaxError(f"'{keyword}' factor must be group valued", lines[start][0])
    return doc.to_map(), end + 1


# ========================================================================
def parse_mlcert(text):
    """Parse an MLCERT v1 document into its terms"""
    lines = _tokens(text)
    if not lines:
        raise MlmapSyntaxError("empty certificate", 1)
    _expect(lines[0], "mlcert", 2)
    version = _integer(lines[0], 1, "a version number")
    if version != MLCERT_VERSION:
        raise MlmapSyntaxError(f"unsupported mlcert version {version}", lines[0][0], 8)
    pos = 1
    k = None
    if pos < len(lines) and lines[pos][2][0] == "k":
        _expect(lines[pos], "k", 2)
        k = _integer(lines[pos], 1, "the arity")
        pos += 1

    terms = []
    while pos < len(lines):
        line = lines[pos]
        n, raw, tokens = line
        _expect(line, "term", 3)
        fields = dict(token.split("=", 1) for token in tokens[1:] if "=" in token)
        if set(fields) != {"q", "I"}:
            raise MlmapSyntaxError("a term header reads 'term q=<q> I=<subset>'", n, 6)
        try:
            q = int(fields["q"])
            I = tuple(sorted(int(s) - 1 for s in fields["I"].split(",")))
        except ValueError:
            raise MlmapSyntaxError("malformed term header", n, 6)
        left, pos = _certificate_factor(lines, pos + 1, "left")
        right, pos = _certificate_factor(lines, pos, "right")
        try:
            term = CertificateTerm(q, I, left, right)
        except InputError as err:
            raise MlmapSyntaxError(str(err), n)
        if k is not None and term.k != k:
            raise MlmapSyntaxError(f"term has arity {term.k}, certificate declares {k}", n)
        k = term.k
        terms.append(term)

    if k is None:
        raise MlmapSyntaxError("an empty certificate must declare its arity with 'k'", lines[0][0])
    return CertificateDocument(k, terms)


# ========================================================================
def emit_mlcert(cert):
    lines = [f"mlcert {MLCERT_VERSION}", f"k {cert.k}"]
    for term in cert.terms:
        lines.append(f"term q={term.q} I={format_subset(term.I)}")
        for keyword, factor in (("left", term.left), ("right", term.right)):
            lines.append(keyword)
            lines.append(emit_mlmap(MlmapDocument.from_map(factor)).rstrip("\n"))
            lines.append("end")
    return "\n".join(lines) + "\n"


# ========================================================================
def read_map(fname):
    with open(fname, "r", encoding="utf-8") as f:
        return parse_mlmap(f.read()).to_map()


# ========================================================================
def write_map(fname, phi):
    with open(fname, "w", encoding="utf-8") as f:
        f.write(emit_mlmap(MlmapDocument.from_map(phi)))


# ========================================================================
def read_certificate(fname, domains=None):
    with open(fname, "r", encoding="utf-8") as f:
        return parse_mlcert(f.read()).to_certificate(domains)


# ========================================================================
def write_certificate(fname, cert):
    with open(fname, "w", encoding="utf-8") as f:
        f.write(emit_mlcert(cert))
