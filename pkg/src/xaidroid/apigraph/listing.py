"""Reading, writing and renaming of .slst method listings.

An .slst document is UTF-8 text. A method block starts with a header line
`== <Class>;--><method> ==`, followed by one instruction row per line in
the form `<offset> <mnemonic> <target?>`, and ends at a blank line. A row
target is an invoked signature (`Lpkg/Cls;->name`), a branch destination
(`[<offset>]`), or absent.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError, UsageError

API_CLASS_PREFIXES = ("Landroid/", "Ljava/", "Ljavax/", "Ldalvik/")


@dataclass(frozen=True)
class InstructionRow:
    """One instruction: target is a signature (str), branch offset (int) or None."""

    offset: int
    opcode: str
    target: object = None

    @property
    def is_branch(self) -> bool:
        return isinstance(self.target, int)

    @property
    def signature(self):
        return self.target if isinstance(self.target, str) else None


@dataclass(frozen=True)
class MethodListing:
    class_name: str
    method_name: str
    rows: tuple

    @property
    def method_id(self) -> str:
        return f"{self.class_name}->{self.method_name}"


def _is_class_descriptor(name: str) -> bool:
    return name.startswith("L") and name.endswith(";") and len(name) > 2


def _parse_header(line: str, lineno: int):
    inner = line.strip()[2:-2].strip()
    if ";-->" not in inner:
        raise ParseError("header must contain ';-->'", line=lineno)
    left, _, method = inner.partition("-->")
    class_name = left
    if not _is_class_descriptor(class_name):
        raise ParseError(f"bad class descriptor {class_name!r}", line=lineno)
    if not method or any(ch.isspace() for ch in method):
        raise ParseError(f"bad method name {method!r}", line=lineno)
    return class_name, method


def _parse_row(line: str, lineno: int) -> InstructionRow:
    parts = line.split()
    if len(parts) not in (2, 3):
        raise ParseError("row must be '<offset> <mnemonic> <target?>'", line=lineno)
    try:
        offset = int(parts[0])
    except ValueError:
        raise ParseError(f"bad offset {parts[0]!r}", line=lineno) from None
    if offset < 0:
        raise ParseError(f"negative offset {offset}", line=lineno)
    opcode = parts[1]
    target = None
    if len(parts) == 3:
        tok = parts[2]
        if tok.startswith("[") and tok.endswith("]"):
            try:
                target = int(tok[1:-1])
            except ValueError:
                raise ParseError(f"bad branch target {tok!r}", line=lineno) from None
        elif ";->" in tok:
            target = tok
        else:
            raise ParseError(f"unrecognized target {tok!r}", line=lineno)
    is_branch_op = opcode.startswith("if-") or opcode.startswith("goto")
    if is_branch_op and not isinstance(target, int):
        raise ParseError(f"{opcode} requires a [<offset>] target", line=lineno)
    if not is_branch_op and isinstance(target, int):
        raise ParseError(f"{opcode} cannot take a branch target", line=lineno)
    if opcode.startswith("invoke") and not isinstance(target, str):
        raise ParseError(f"{opcode} requires a signature target", line=lineno)
    return InstructionRow(offset, opcode, target)


def _close_block(header, rows, header_line):
    class_name, method_name = header
    if not rows:
        raise ParseError(f"method {method_name!r} has no rows", line=header_line)
    offsets = set()
    prev = -1
    for row in rows:
        if row.offset <= prev:
            raise ParseError(
                f"offset {row.offset} not increasing in {method_name!r}", line=header_line
            )
        prev = row.offset
        offsets.add(row.offset)
    for row in rows:
        if row.is_branch and row.target not in offsets:
            raise ParseError(
                f"branch target [{row.target}] has no row in {method_name!r}",
                line=header_line,
            )
    return MethodListing(class_name, method_name, tuple(rows))


def parse_listing(text: str):
    """Parse an .slst document into a list of MethodListing, in file order."""
    listings = []
    seen = set()
    header = None
    header_line = 0
    rows = []
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            if header is not None:
                listings.append(_close_block(header, rows, header_line))
                header, rows = None, []
            continue
        if line.startswith("==") and line.endswith("=="):
            if header is not None:
                raise ParseError("header inside an open method block", line=lineno)
            header = _parse_header(line, lineno)
            if header in seen:
                raise ParseError(
                    f"duplicate method {header[0]}-->{header[1]}", line=lineno
                )
            seen.add(header)
            header_line = lineno
            continue
        if header is None:
            raise ParseError("instruction row outside any method block", line=lineno)
        rows.append(_parse_row(line, lineno))
    if header is not None:
        listings.append(_close_block(header, rows, header_line))
    return listings


def pretty_print(listings) -> str:
    """Render listings back to .slst text; parse(pretty_print(x)) == x."""
    blocks = []
    for l in listings:
        lines = [f"== {l.class_name}-->{l.method_name} =="]
        for row in l.rows:
            if row.target is None:
                lines.append(f"{row.offset} {row.opcode}")
            elif isinstance(row.target, int):
                lines.append(f"{row.offset} {row.opcode} [{row.target}]")
            else:
                lines.append(f"{row.offset} {row.opcode} {row.target}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _split_signature(sig: str):
    cls, _, name = sig.partition(";->")
    return cls + ";", name


def _check_renaming(renaming: dict):
    class_map, method_map = {}, {}
    for key, val in renaming.items():
        if _is_class_descriptor(key):
            if not _is_class_descriptor(val):
                raise UsageError(f"class {key!r} must map to a class descriptor")
            if key.startswith(API_CLASS_PREFIXES):
                raise UsageError(f"cannot rename API class {key!r}")
            if val.startswith(API_CLASS_PREFIXES):
                raise UsageError(f"renaming {key!r} collides with an API prefix: {val!r}")
            class_map[key] = val
        else:
            if _is_class_descriptor(val) or ";" in key or ";" in val:
                raise UsageError(f"method renaming {key!r} -> {val!r} is malformed")
            method_map[key] = val
    if len(set(class_map.values())) != len(class_map):
        raise UsageError("class renaming is not injective")
    if len(set(method_map.values())) != len(method_map):
        raise UsageError("method renaming is not injective")
    return class_map, method_map


def rename_identifiers(listings, renaming: dict):
    """Rewrite local class/method names; API signatures are never touched.

    Keys that are class descriptors rename classes, all other keys rename
    method names. The map must be injective per kind and must not involve
    API identifiers.
    """
    class_map, method_map = _check_renaming(renaming)

    def rename_sig(sig):
        cls, name = _split_signature(sig)
        if cls.startswith(API_CLASS_PREFIXES):
            return sig
        return class_map.get(cls, cls) + "->" + method_map.get(name, name)

    out = []
    for l in listings:
        rows = tuple(
            InstructionRow(r.offset, r.opcode, rename_sig(r.target))
            if isinstance(r.target, str)
            else r
            for r in l.rows
        )
        out.append(
            MethodListing(
                class_map.get(l.class_name, l.class_name),
                method_map.get(l.method_name, l.method_name),
                rows,
            )
        )
    return out
