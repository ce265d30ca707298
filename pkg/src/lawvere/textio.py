"""Line-oriented text formats for categories, presheaves, sites, theories,
bundles and kernels, with canonical printing.

Every format is UTF-8, one declaration per line, ``#`` starts a comment.
Errors carry the line and column of the offending token.  ``parse`` infers
the kind of file from its keywords; ``dump`` prints the canonical form, and
``parse(dump(x))`` rebuilds ``x``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from . import linalg as la
from .fibered import BundleMap, LinearBundle, SetMap
from .fincat.core import FinCategory, FinFunctor, Presheaf
from .kernels import BasedSpace, Kernel, MeasSpace
from .site import Cover, FiniteSite, TruncatedFinSetSite
from .theory import BUILTIN_THEORIES, TheoryPresentation


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


NAME = r"[^\s.:=+{},\[\]#]+"


def safe_names(names) -> list[str]:
    """Printable, pairwise distinct versions of arbitrary labels."""
    out: list[str] = []
    seen: set[str] = set()
    for n in names:
        base = re.sub(r"[\s.:=+{},\[\]#]+", "_", point_name(n)).strip("_") or "_"
        s, k = base, 1
        while s in seen:
            k += 1
            s = f"{base}_{k}"
        seen.add(s)
        out.append(s)
    return out


@dataclass
class Line:
    no: int
    text: str  # comment stripped, right-trimmed
    indent: int

    def col(self, token: str, start: int = 0) -> int:
        i = self.text.find(token, start)
        return (i if i >= 0 else 0) + 1

    def error(self, message: str, token: str | None = None) -> ParseError:
        return ParseError(message, self.no, self.col(token) if token else self.indent + 1)


def _lines(text: str) -> Iterator[Line]:
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            yield Line(no, body, len(body) - len(body.lstrip()))


def _match(pattern: str, line: Line, what: str) -> re.Match:
    m = re.fullmatch(pattern, line.text.strip())
    if m is None:
        raise line.error(f"malformed {what}")
    return m


def _names(body: str, line: Line) -> list[str]:
    items = [x.strip() for x in body.split(",")] if body.strip() else []
    for x in items:
        if not re.fullmatch(NAME, x):
            raise line.error(f"bad name {x!r}", x or None)
    if len(set(items)) != len(items):
        dup = next(x for x in items if items.count(x) > 1)
        raise line.error(f"duplicate element {dup!r}", dup)
    return items


def _keyword(line: Line) -> str:
    return line.text.split(None, 1)[0]


# ---------------------------------------------------------------- categories


class _CategoryBuilder:
    def __init__(self):
        self.name = ""
        self.objects: list[str] = []
        self.arrows: list[tuple[str, int, int]] = []
        self.ids: dict[int, int] = {}
        self.table: dict[tuple[int, int], int] = {}
        self.cmp_lines: dict[tuple[int, int], Line] = {}

    def obj(self, name: str, line: Line) -> int:
        if name not in self.objects:
            raise line.error(f"undeclared object {name!r}", name)
        return self.objects.index(name)

    def arr(self, name: str, line: Line) -> int:
        for i, a in enumerate(self.arrows):
            if a[0] == name:
                return i
        raise line.error(f"undeclared arrow {name!r}", name)

    def feed(self, line: Line) -> bool:
        kw = _keyword(line)
        if kw == "category":
            self.name = _match(r"category\s+(.+)", line, "category header").group(1).strip()
        elif kw == "obj":
            name = _match(rf"obj\s+({NAME})", line, "object declaration").group(1)
            if name in self.objects:
                raise line.error(f"duplicate object {name!r}", name)
            self.objects.append(name)
        elif kw == "arr":
            m = _match(rf"arr\s+({NAME})\s*:\s*({NAME})\s*->\s*({NAME})", line, "arrow declaration")
            name = m.group(1)
            if any(a[0] == name for a in self.arrows):
                raise line.error(f"duplicate arrow {name!r}", name)
            self.arrows.append((name, self.obj(m.group(2), line), self.obj(m.group(3), line)))
        elif kw == "id":
            m = _match(rf"id\s+({NAME})\s*=\s*({NAME})", line, "identity declaration")
            o, a = self.obj(m.group(1), line), self.arr(m.group(2), line)
            if self.arrows[a][1] != o or self.arrows[a][2] != o:
                raise line.error(f"{m.group(2)!r} is not an endomorphism of {m.group(1)!r}", m.group(2))
            if o in self.ids:
                raise line.error(f"second identity for {m.group(1)!r}", m.group(1))
            if a in self.ids.values():
                raise line.error(f"{m.group(2)!r} is already an identity", m.group(2))
            self.ids[o] = a
        elif kw == "cmp":
            m = _match(rf"cmp\s+({NAME})\s*\.\s*({NAME})\s*=\s*({NAME})", line, "composite")
            g, f, h = (self.arr(m.group(k), line) for k in (1, 2, 3))
            if self.arrows[f][2] != self.arrows[g][1]:
                raise line.error(f"{m.group(1)}.{m.group(2)} is not composable", m.group(1))
            if (self.arrows[h][1], self.arrows[h][2]) != (self.arrows[f][1], self.arrows[g][2]):
                raise line.error(f"{m.group(3)!r} has the wrong endpoints for {m.group(1)}.{m.group(2)}", m.group(3))
            if (g, f) in self.table and self.table[g, f] != h:
                raise line.error(f"conflicting composite for {m.group(1)}.{m.group(2)}", m.group(1))
            self.table[g, f] = h
            self.cmp_lines[g, f] = line
        else:
            return False
        return True

    def build(self, last: int) -> FinCategory:
        for o, name in enumerate(self.objects):
            if o not in self.ids:
                raise ParseError(f"object {name!r} has no identity", last)
        table = dict(self.table)
        for o, i in self.ids.items():
            for f, (_, s, t) in enumerate(self.arrows):
                for key in ((i, f) if t == o else None, (f, i) if s == o else None):
                    if key is None:
                        continue
                    if table.get(key, f) != f:
                        line = self.cmp_lines[key]
                        raise line.error("composite with an identity must be the arrow itself")
                    table[key] = f
        ids = [self.ids[o] for o in range(len(self.objects))]
        return FinCategory(self.objects, self.arrows, ids, table, name=self.name)


def dump_category(c: FinCategory, header: bool = True) -> str:
    objs, arrs = safe_names(c.objects), safe_names(c.arrow_names)
    out = [f"category {c.name}"] if header and c.name else []
    out += [f"obj {o}" for o in objs]
    out += [f"arr {n}: {objs[s]} -> {objs[t]}" for n, s, t in zip(arrs, c.src, c.tgt)]
    out += [f"id {objs[o]} = {arrs[i]}" for o, i in enumerate(c.identities)]
    ids = set(c.identities)
    for g, f in c.composable_pairs():
        if g in ids or f in ids:
            continue
        out.append(f"cmp {arrs[g]}.{arrs[f]} = {arrs[c.compose(g, f)]}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ presheaves


def _parse_presheaf_lines(cat: FinCategory, lines: list[Line], last: int) -> Presheaf:
    values: dict[int, list[str]] = {}
    acts: dict[int, dict[str, str]] = {}
    for line in lines:
        kw = _keyword(line)
        if kw == "val":
            m = _match(rf"val\s+({NAME})\s*=\s*\{{(.*)\}}", line, "value set")
            if m.group(1) not in cat.objects:
                raise line.error(f"undeclared object {m.group(1)!r}", m.group(1))
            o = cat.objects.index(m.group(1))
            if o in values:
                raise line.error(f"second value set for {m.group(1)!r}", m.group(1))
            values[o] = _names(m.group(2), line)
        else:
            m = _match(rf"act\s+({NAME})\s*:\s*({NAME})\s*->\s*({NAME})", line, "action")
            if m.group(1) not in cat.arrow_names:
                raise line.error(f"undeclared arrow {m.group(1)!r}", m.group(1))
            f = cat.arrow_names.index(m.group(1))
            s, t = cat.src[f], cat.tgt[f]
            if t not in values or m.group(2) not in values[t]:
                raise line.error(f"{m.group(2)!r} is not in the value set at {cat.objects[t]!r}", m.group(2))
            if s not in values or m.group(3) not in values[s]:
                raise line.error(f"{m.group(3)!r} is not in the value set at {cat.objects[s]!r}", m.group(3))
            prev = acts.setdefault(f, {}).get(m.group(2))
            if prev is not None and prev != m.group(3):
                raise line.error(f"conflicting action of {m.group(1)!r} on {m.group(2)!r}", m.group(2))
            acts[f][m.group(2)] = m.group(3)
    for o, name in enumerate(cat.objects):
        if o not in values:
            raise ParseError(f"no value set for object {name!r}", last)
    ids = set(cat.identities)
    actions = []
    for f in range(cat.n_arrows):
        s, t = cat.src[f], cat.tgt[f]
        if f in ids:
            given = acts.get(f, {})
            if any(a != b for a, b in given.items()):
                raise ParseError(f"identity {cat.arrow_names[f]!r} must act trivially", last)
            actions.append(tuple(range(len(values[t]))))
            continue
        table = acts.get(f, {})
        missing = [e for e in values[t] if e not in table]
        if missing:
            raise ParseError(f"action of {cat.arrow_names[f]!r} on {missing[0]!r} is missing", last)
        actions.append(tuple(values[s].index(table[e]) for e in values[t]))
    labels = [values[o] for o in range(cat.n_objects)]
    return Presheaf(cat, [len(v) for v in labels], actions, labels)


def dump_presheaf(p: Presheaf, with_category: bool = True) -> str:
    cat = p.category
    out = dump_category(cat).splitlines() if with_category else []
    objs, arrs = safe_names(cat.objects), safe_names(cat.arrow_names)
    names = [safe_names(p.label(c, x) for x in range(p.sizes[c])) for c in range(cat.n_objects)]
    out += [f"val {objs[c]} = {{{', '.join(names[c])}}}" for c in range(cat.n_objects)]
    ids = set(cat.identities)
    for f in range(cat.n_arrows):
        if f in ids:
            continue
        s, t = cat.src[f], cat.tgt[f]
        out += [f"act {arrs[f]}: {names[t][x]} -> {names[s][y]}" for x, y in enumerate(p.actions[f])]
    return "\n".join(out) + "\n"


# ----------------------------------------------------------- sites, theories


def _parse_cover(cat: FinCategory, line: Line) -> Cover:
    m = _match(rf"cover\s+({NAME})\s*=\s*(.+)", line, "cover")
    if m.group(1) not in cat.objects:
        raise line.error(f"undeclared object {m.group(1)!r}", m.group(1))
    apex = cat.objects.index(m.group(1))
    body = m.group(2).strip()
    if body == "empty":
        return Cover(apex, ())
    arrows = []
    for name in (x.strip() for x in body.split("+")):
        if name not in cat.arrow_names:
            raise line.error(f"undeclared arrow {name!r}", name)
        f = cat.arrow_names.index(name)
        if cat.tgt[f] != apex:
            raise line.error(f"{name!r} does not land in {m.group(1)!r}", name)
        arrows.append(f)
    return Cover(apex, tuple(arrows))


def dump_site(s: FiniteSite) -> str:
    if isinstance(s, TruncatedFinSetSite):
        return f"site finset {s.n}\n"
    cat = s.category
    objs, arrs = safe_names(cat.objects), safe_names(cat.arrow_names)
    out = dump_category(cat).splitlines()
    for cv in s.covers:
        body = " + ".join(arrs[f] for f in cv.arrows) if cv.arrows else "empty"
        out.append(f"cover {objs[cv.apex]} = {body}")
    return "\n".join(out) + "\n"


def dump_theory(t: TheoryPresentation) -> str:
    key = getattr(t, "builtin_key", None)
    if key is not None:
        return f"builtin {key} {t.n}\n"
    out = [f"site finset {t.n}"] + dump_category(t.category).splitlines()
    sc = t.site.category
    arrs = safe_names(t.category.arrow_names)
    out += [f"tau {sc.arrow_names[h]} = {arrs[t.tau.arr_map[h]]}" for h in range(sc.n_arrows)]
    return "\n".join(out) + "\n"


def builtin_theory(key: str, n: int) -> TheoryPresentation:
    if key not in BUILTIN_THEORIES:
        raise ValueError(f"unknown theory {key!r}; choose from {', '.join(sorted(BUILTIN_THEORIES))}")
    t = BUILTIN_THEORIES[key](n)
    t.builtin_key = key
    return t


def _parse_theory(lines: list[Line], last: int) -> TheoryPresentation:
    site_line = next((ln for ln in lines if _keyword(ln) == "site"), None)
    builtin = next((ln for ln in lines if _keyword(ln) == "builtin"), None)
    if builtin is not None:
        m = _match(rf"builtin\s+({NAME})\s+(\d+)", builtin, "builtin theory")
        try:
            return builtin_theory(m.group(1), int(m.group(2)))
        except ValueError as e:
            raise builtin.error(str(e), m.group(1)) from None
    if site_line is None:
        raise ParseError("theory needs a 'site finset N' line", last)
    site = _parse_site_header(site_line)
    b = _CategoryBuilder()
    taus = []
    for line in lines:
        kw = _keyword(line)
        if kw == "site":
            continue
        if kw == "tau":
            taus.append(line)
        elif not b.feed(line):
            raise line.error(f"unexpected {kw!r} in a theory file", kw)
    cat = b.build(last)
    if cat.n_objects != site.category.n_objects:
        raise ParseError(f"theory has {cat.n_objects} objects, the site {site.category.n_objects}", last)
    sc = site.category
    amap: dict[int, int] = {}
    for line in taus:
        m = _match(r"tau\s+(\S+)\s*=\s*(\S+)", line, "tau line")
        if m.group(1) not in sc.arrow_names:
            raise line.error(f"undeclared site arrow {m.group(1)!r}", m.group(1))
        h = sc.arrow_names.index(m.group(1))
        if h in amap:
            raise line.error(f"second image for {m.group(1)!r}", m.group(1))
        amap[h] = b.arr(m.group(2), line)
    missing = [sc.arrow_names[h] for h in range(sc.n_arrows) if h not in amap]
    if missing:
        raise ParseError(f"no image for site arrow {missing[0]!r}", last)
    tau = FinFunctor(sc, cat, list(range(cat.n_objects)), [amap[h] for h in range(sc.n_arrows)], name="tau")
    return TheoryPresentation(site, cat, tau)


def _parse_site_header(line: Line) -> TruncatedFinSetSite:
    m = _match(r"site\s+finset\s+(\d+)", line, "site line")
    n = int(m.group(1))
    if n < 1:
        raise line.error("the bound must be positive", m.group(1))
    return TruncatedFinSetSite(n)


# ---------------------------------------------------------------- bundles


@dataclass
class FibFile:
    """Finite sets, maps between them, linear bundles and bundle maps."""

    K: object = la.QQ
    sets: dict[str, list[str]] = field(default_factory=dict)
    funs: dict[str, tuple[str, str, SetMap]] = field(default_factory=dict)
    bundles: dict[str, tuple[str, LinearBundle]] = field(default_factory=dict)
    maps: dict[str, tuple[str, str, BundleMap]] = field(default_factory=dict)
    inline: set[str] = field(default_factory=set)

    def fun(self, name: str) -> SetMap:
        return self.funs[name][2]

    def bundle(self, name: str) -> LinearBundle:
        return self.bundles[name][1]


def _parse_field(line: Line):
    m = _match(r"field\s+(QQ|rat|GF\((\d+)\)|\d+)", line, "field")
    spec = m.group(1)
    if spec in ("QQ", "rat"):
        return la.QQ
    q = int(m.group(2) or spec)
    try:
        return la.field(q)
    except ValueError as e:
        raise line.error(str(e), spec) from None


def _parse_fun(line: Line, sets: dict[str, list[str]]) -> tuple[str, str, str, SetMap]:
    m = _match(rf"fun\s+({NAME})\s*:\s*({NAME})\s*->\s*({NAME})\s*=\s*\{{(.*)\}}", line, "function")
    name, dom, cod = m.group(1), m.group(2), m.group(3)
    for s in (dom, cod):
        if s not in sets:
            raise line.error(f"undeclared set {s!r}", s)
    values: dict[str, str] = {}
    for item in (x.strip() for x in m.group(4).split(",") if x.strip()):
        parts = [x.strip() for x in item.split(":")]
        if len(parts) != 2:
            raise line.error(f"expected 'a: b', got {item!r}", item)
        a, b = parts
        if a not in sets[dom]:
            raise line.error(f"{a!r} is not in {dom!r}", a)
        if b not in sets[cod]:
            raise line.error(f"{b!r} is not in {cod!r}", b)
        if a in values:
            raise line.error(f"{a!r} is mapped twice", a)
        values[a] = b
    missing = [a for a in sets[dom] if a not in values]
    if missing:
        raise line.error(f"no value for {missing[0]!r}")
    return name, dom, cod, SetMap(tuple(sets[cod].index(values[a]) for a in sets[dom]), len(sets[cod]))


def _parse_matrix(body: str, line: Line, K) -> list[list]:
    s = body.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise line.error("matrix must be written [[...], ...]", s[:1] or None)
    inner = s[1:-1].strip()
    if not inner:
        return []
    rows = re.findall(r"\[([^\[\]]*)\]", inner)
    if re.sub(r"\[[^\[\]]*\]", "", inner).replace(",", "").strip():
        raise line.error("stray characters in matrix", inner)
    out = []
    for r in rows:
        entries = [x.strip() for x in r.split(",")] if r.strip() else []
        row = []
        for x in entries:
            try:
                row.append(la.scalar(Fraction(x), K))
            except (ValueError, ZeroDivisionError):
                raise line.error(f"bad entry {x!r}", x) from None
        out.append(row)
    return out


def _parse_fib(lines: list[Line], last: int) -> FibFile:
    ff = FibFile()
    bundle_dims: dict[str, dict[str, int]] = {}
    map_mats: dict[str, dict[str, tuple[list, Line]]] = {}
    current: tuple[str, str] | None = None  # ("bundle" | "hom", name)
    pending_inline: str | None = None
    for line in lines:
        kw = _keyword(line)
        if pending_inline is not None and kw != "base":
            raise line.error(f"bundle {pending_inline!r} needs 'over <set>' or a 'base = {{...}}' line", kw)
        if kw == "field":
            ff.K = _parse_field(line)
        elif kw == "set":
            m = _match(rf"set\s+({NAME})\s*=\s*\{{(.*)\}}", line, "set")
            if m.group(1) in ff.sets:
                raise line.error(f"duplicate set {m.group(1)!r}", m.group(1))
            ff.sets[m.group(1)] = _names(m.group(2), line)
        elif kw == "fun":
            name, dom, cod, phi = _parse_fun(line, ff.sets)
            if name in ff.funs:
                raise line.error(f"duplicate function {name!r}", name)
            ff.funs[name] = (dom, cod, phi)
        elif kw == "bundle":
            m = _match(rf"bundle\s+({NAME})(?:\s+over\s+({NAME}))?", line, "bundle header")
            name = m.group(1)
            if name in bundle_dims:
                raise line.error(f"duplicate bundle {name!r}", name)
            if m.group(2) is None:
                pending_inline = name
                base = name
            else:
                base = m.group(2)
                if base not in ff.sets:
                    raise line.error(f"undeclared set {base!r}", base)
            bundle_dims[name] = {}
            ff.bundles[name] = (base, None)
            current = ("bundle", name)
        elif kw == "base":
            if pending_inline is None:
                raise line.error("'base' must directly follow a 'bundle <name>' line", "base")
            m = _match(r"base\s*=\s*\{(.*)\}", line, "base")
            if pending_inline in ff.sets:
                raise line.error(f"set {pending_inline!r} already declared", "base")
            ff.sets[pending_inline] = _names(m.group(1), line)
            ff.inline.add(pending_inline)
            pending_inline = None
        elif kw == "fiber":
            if current is None or current[0] != "bundle":
                raise line.error("'fiber' outside a bundle block", "fiber")
            m = _match(rf"fiber\s+({NAME})\s*=\s*dim\s+(\d+)", line, "fiber")
            base = ff.bundles[current[1]][0]
            if m.group(1) not in ff.sets[base]:
                raise line.error(f"{m.group(1)!r} is not a point of {base!r}", m.group(1))
            if m.group(1) in bundle_dims[current[1]]:
                raise line.error(f"second fiber at {m.group(1)!r}", m.group(1))
            bundle_dims[current[1]][m.group(1)] = int(m.group(2))
        elif kw == "hom":
            m = _match(rf"hom\s+({NAME})\s*:\s*({NAME})\s*->\s*({NAME})", line, "bundle map header")
            name, a, b = m.groups()
            if name in map_mats:
                raise line.error(f"duplicate bundle map {name!r}", name)
            for x in (a, b):
                if x not in ff.bundles:
                    raise line.error(f"undeclared bundle {x!r}", x)
            if ff.bundles[a][0] != ff.bundles[b][0]:
                raise line.error(f"{a!r} and {b!r} lie over different sets", b)
            map_mats[name] = {}
            ff.maps[name] = (a, b, None)
            current = ("hom", name)
        elif kw == "map":
            if current is None or current[0] != "hom":
                raise line.error("'map' outside a hom block", "map")
            m = _match(rf"map\s+({NAME})\s*=\s*(.*)", line, "map")
            base = ff.bundles[ff.maps[current[1]][0]][0]
            if m.group(1) not in ff.sets[base]:
                raise line.error(f"{m.group(1)!r} is not a point of {base!r}", m.group(1))
            map_mats[current[1]][m.group(1)] = (_parse_matrix(m.group(2), line, ff.K), line)
        else:
            raise line.error(f"unknown keyword {kw!r}", kw)
    if pending_inline is not None:
        raise ParseError(f"bundle {pending_inline!r} has no base", last)
    for name, (base, _) in ff.bundles.items():
        dims = bundle_dims[name]
        missing = [p for p in ff.sets[base] if p not in dims]
        if missing:
            raise ParseError(f"bundle {name!r} has no fiber at {missing[0]!r}", last)
        ff.bundles[name] = (base, LinearBundle(tuple(dims[p] for p in ff.sets[base]), ff.K))
    for name, (a, b, _) in ff.maps.items():
        base = ff.bundles[a][0]
        va, vb = ff.bundle(a), ff.bundle(b)
        mats = []
        for i, p in enumerate(ff.sets[base]):
            shape = (vb.dims[i], va.dims[i])
            if p not in map_mats[name]:
                if shape[0] and shape[1]:
                    raise ParseError(f"bundle map {name!r} has no matrix at {p!r}", last)
                mats.append(la.zeros(*shape, ff.K))
                continue
            rows, line = map_mats[name][p]
            got = (len(rows), len(rows[0]) if rows else shape[1])
            if got != shape or any(len(r) != shape[1] for r in rows):
                raise line.error(f"matrix at {p!r} should be {shape[0]}x{shape[1]}", p)
            mats.append(la.matrix(rows, ff.K, shape))
        ff.maps[name] = (a, b, BundleMap(va, vb, tuple(mats)))
    return ff


def dump_fib(ff: FibFile) -> str:
    out = [f"field {la.field_name(ff.K)}"]
    for name, pts in ff.sets.items():
        if name not in ff.inline:
            out.append(f"set {name} = {{{', '.join(pts)}}}")
    # bundles carrying their own base come first, since functions may refer to that base
    order = sorted(ff.bundles, key=lambda n: ff.bundles[n][0] != n or n not in ff.inline)
    for name in order:
        base, v = ff.bundles[name]
        if base == name and name in ff.inline:
            out += [f"bundle {name}", f"base = {{{', '.join(ff.sets[base])}}}"]
            out += [f"fiber {p} = dim {d}" for p, d in zip(ff.sets[base], v.dims)]
    for name, (dom, cod, phi) in ff.funs.items():
        body = ", ".join(f"{a}: {ff.sets[cod][v]}" for a, v in zip(ff.sets[dom], phi.values))
        out.append(f"fun {name} : {dom} -> {cod} = {{{body}}}")
    for name in order:
        base, v = ff.bundles[name]
        if not (base == name and name in ff.inline):
            out.append(f"bundle {name} over {base}")
            out += [f"fiber {p} = dim {d}" for p, d in zip(ff.sets[base], v.dims)]
    for name, (a, b, f) in ff.maps.items():
        out.append(f"hom {name} : {a} -> {b}")
        for p, mat in zip(ff.sets[ff.bundles[a][0]], f.mats):
            out.append(f"map {p} = {format_matrix(mat, ff.K)}")
    return "\n".join(out) + "\n"


def format_matrix(mat, K) -> str:
    rows = la.entries(mat)
    if mat.shape[0] and not mat.shape[1]:
        return "[" + ", ".join("[]" for _ in range(mat.shape[0])) + "]"
    return "[" + ", ".join("[" + ", ".join(la.format_entry(x, K) for x in r) + "]" for r in rows) + "]"


# ------------------------------------------------------------------ kernels


@dataclass
class KernelDecl:
    source: str
    target: str
    phi: str
    rows: dict[int, dict[int, Fraction]]
    line: int


@dataclass
class KernelFile:
    """Spaces over base spaces, base maps and kernel tables.

    Kernels are assembled on demand, so a table breaking the support
    condition parses and only fails when the kernel is built.
    """

    spaces: dict[str, list[str]] = field(default_factory=dict)
    over: dict[str, tuple[str, tuple[int, ...]]] = field(default_factory=dict)
    funs: dict[str, tuple[str, str, tuple[int, ...]]] = field(default_factory=dict)
    kernels: dict[str, KernelDecl] = field(default_factory=dict)

    def based(self, name: str) -> BasedSpace:
        pts = self.spaces[name]
        if name in self.over:
            base, proj = self.over[name]
            return BasedSpace(MeasSpace(tuple(pts), name), MeasSpace(tuple(self.spaces[base]), base), proj)
        return BasedSpace(MeasSpace(tuple(pts), name), MeasSpace(("*",), "*"), (0,) * len(pts))

    def kernel(self, name: str) -> Kernel:
        d = self.kernels[name]
        src, tgt = self.based(d.source), self.based(d.target)
        if d.phi == "id":
            if src.base != tgt.base:
                raise ParseError(f"kernel {name!r} is over id but its spaces have different bases", d.line)
            phi = tuple(range(src.base.size))
        else:
            phi = self.funs[d.phi][2]
        table = [d.rows.get(x, {}) for x in range(src.size)]
        return Kernel.from_table(src, tgt, phi, table)


def _base_name(kf: KernelFile, space: str) -> str:
    return kf.over[space][0] if space in kf.over else "*"


def _parse_kernels(lines: list[Line], last: int) -> KernelFile:
    kf = KernelFile()
    for line in lines:
        kw = _keyword(line)
        if kw == "space":
            m = _match(rf"space\s+({NAME})\s*=\s*\{{(.*)\}}", line, "space")
            if m.group(1) in kf.spaces or m.group(1) == "*":
                raise line.error(f"duplicate space {m.group(1)!r}", m.group(1))
            kf.spaces[m.group(1)] = _names(m.group(2), line)
        elif kw == "over":
            m = _match(rf"over\s+({NAME})\s*->\s*({NAME})\s*:\s*(.*)", line, "over line")
            x, base = m.group(1), m.group(2)
            for s in (x, base):
                if s not in kf.spaces:
                    raise line.error(f"undeclared space {s!r}", s)
            if x in kf.over:
                raise line.error(f"second 'over' line for {x!r}", x)
            values: dict[str, str] = {}
            for item in (t.strip() for t in m.group(3).split(",") if t.strip()):
                parts = [t.strip() for t in item.split("=")]
                if len(parts) != 2 or parts[0] not in kf.spaces[x] or parts[1] not in kf.spaces[base]:
                    raise line.error(f"bad assignment {item!r}", item)
                values[parts[0]] = parts[1]
            missing = [p for p in kf.spaces[x] if p not in values]
            if missing:
                raise line.error(f"no base point for {missing[0]!r}")
            kf.over[x] = (base, tuple(kf.spaces[base].index(values[p]) for p in kf.spaces[x]))
        elif kw == "fun":
            name, dom, cod, phi = _parse_fun(line, kf.spaces)
            if name in kf.funs or name == "id":
                raise line.error(f"duplicate function {name!r}", name)
            kf.funs[name] = (dom, cod, phi.values)
        elif kw == "kernel":
            m = _match(rf"kernel\s+({NAME})\s*:\s*({NAME})\s*->\s*({NAME})\s+over\s+({NAME})", line, "kernel header")
            name, a, b, phi = m.groups()
            if name in kf.kernels or name in ("space", "over", "fun", "kernel"):
                raise line.error(f"duplicate or reserved kernel name {name!r}", name)
            for s in (a, b):
                if s not in kf.spaces:
                    raise line.error(f"undeclared space {s!r}", s)
            if phi != "id":
                if phi not in kf.funs:
                    raise line.error(f"undeclared function {phi!r}", phi)
                dom, cod, _ = kf.funs[phi]
                if (dom, cod) != (_base_name(kf, a), _base_name(kf, b)):
                    raise line.error(f"{phi!r} does not go between the bases of {a!r} and {b!r}", phi)
            kf.kernels[name] = KernelDecl(a, b, phi, {}, line.no)
        elif kw in kf.kernels:
            d = kf.kernels[kw]
            m = _match(rf"({NAME})\s+({NAME})\s*=\s*\{{(.*)\}}", line, "kernel row")
            x = m.group(2)
            if x not in kf.spaces[d.source]:
                raise line.error(f"{x!r} is not a point of {d.source!r}", x)
            i = kf.spaces[d.source].index(x)
            if i in d.rows:
                raise line.error(f"second row for {x!r}", x)
            row: dict[int, Fraction] = {}
            for item in (t.strip() for t in m.group(3).split(",") if t.strip()):
                parts = [t.strip() for t in item.split(":")]
                if len(parts) != 2 or parts[0] not in kf.spaces[d.target]:
                    raise line.error(f"bad mass {item!r}", item)
                try:
                    mass = Fraction(parts[1])
                except (ValueError, ZeroDivisionError):
                    raise line.error(f"bad mass {parts[1]!r}", parts[1]) from None
                y = kf.spaces[d.target].index(parts[0])
                if y in row:
                    raise line.error(f"second mass at {parts[0]!r}", parts[0])
                row[y] = mass
            d.rows[i] = row
        else:
            raise line.error(f"unknown keyword or kernel {kw!r}", kw)
    return kf


def dump_kernels(kf: KernelFile) -> str:
    out = [f"space {n} = {{{', '.join(p)}}}" for n, p in kf.spaces.items()]
    for x, (base, proj) in kf.over.items():
        body = ", ".join(f"{p}={kf.spaces[base][i]}" for p, i in zip(kf.spaces[x], proj))
        out.append(f"over {x} -> {base} : {body}")
    for name, (dom, cod, values) in kf.funs.items():
        body = ", ".join(f"{a}: {kf.spaces[cod][v]}" for a, v in zip(kf.spaces[dom], values))
        out.append(f"fun {name} : {dom} -> {cod} = {{{body}}}")
    for name, d in kf.kernels.items():
        out.append(f"kernel {name} : {d.source} -> {d.target} over {d.phi}")
        tgt = kf.spaces[d.target]
        for i, x in enumerate(kf.spaces[d.source]):
            row = {y: m for y, m in d.rows.get(i, {}).items() if m != 0}
            if row:
                body = ", ".join(f"{tgt[y]}: {row[y]}" for y in sorted(row))
                out.append(f"{name} {x} = {{{body}}}")
    return "\n".join(out) + "\n"


def point_name(x) -> str:
    if isinstance(x, tuple):
        return "<" + "|".join(point_name(v) for v in x) + ">"
    return str(x)


def kernel_file(kernels: dict[str, Kernel]) -> KernelFile:
    """Package kernels for printing; spaces, bases and base maps get derived names."""
    kf = KernelFile()
    names: dict[MeasSpace, str] = {}

    def space(s: MeasSpace) -> str:
        if s in names:
            return names[s]
        base = s.name or "S"
        name, k = base, 1
        while name in kf.spaces or name == "*":
            k += 1
            name = f"{base}{k}"
        names[s] = name
        kf.spaces[name] = [point_name(p) for p in s.points]
        return name

    def based(b: BasedSpace) -> str:
        x = space(b.space)
        if not (b.base.size == 1 and all(v == 0 for v in b.proj) and b.base.points in (("*",), (0,))):
            kf.over[x] = (space(b.base), b.proj)
        return x

    for name, k in kernels.items():
        a, b = based(k.source), based(k.target)
        if k.source.base == k.target.base and k.phi == tuple(range(k.source.base.size)):
            phi = "id"
        else:
            phi = f"{name}_base"
            kf.funs[phi] = (_base_name(kf, a), _base_name(kf, b), k.phi)
        kf.kernels[name] = KernelDecl(a, b, phi, {i: dict(r) for i, r in enumerate(k.rows) if r}, 0)
    return kf


# ------------------------------------------------------------------ dispatch


KINDS = ("category", "presheaf", "site", "theory", "bundles", "kernels")


def detect_kind(text: str) -> str:
    kws = {_keyword(ln) for ln in _lines(text)}
    if kws & {"builtin", "tau"}:
        return "theory"
    if kws & {"space", "kernel", "over"}:
        return "kernels"
    if kws & {"bundle", "set", "fun", "hom", "field"}:
        return "bundles"
    if kws & {"cover", "site"}:
        return "site"
    if kws & {"val", "act"}:
        return "presheaf"
    return "category"


def parse(text: str, kind: str | None = None):
    """Parse a file of the given (or detected) kind into its typed object."""
    kind = kind or detect_kind(text)
    lines = list(_lines(text))
    last = lines[-1].no if lines else 1
    if kind == "theory":
        return _parse_theory(lines, last)
    if kind == "kernels":
        return _parse_kernels(lines, last)
    if kind == "bundles":
        return _parse_fib(lines, last)
    if kind in ("category", "presheaf", "site"):
        header = next((ln for ln in lines if _keyword(ln) == "site"), None)
        if header is not None:
            if len(lines) > 1:
                raise lines[1].error("'site finset N' stands alone")
            return _parse_site_header(header)
        b = _CategoryBuilder()
        rest = []
        for line in lines:
            if not b.feed(line):
                kw = _keyword(line)
                if kw not in ("val", "act", "cover"):
                    raise line.error(f"unknown keyword {kw!r}", kw)
                rest.append(line)
        cat = b.build(last)
        if kind == "category" and not rest:
            return cat
        if all(_keyword(ln) == "cover" for ln in rest) and rest:
            return FiniteSite(cat, [_parse_cover(cat, ln) for ln in rest], name=cat.name)
        if any(_keyword(ln) == "cover" for ln in rest):
            bad = next(ln for ln in rest if _keyword(ln) != "cover")
            raise bad.error("a site file cannot contain presheaf lines", _keyword(bad))
        return _parse_presheaf_lines(cat, rest, last)
    raise ValueError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")


def dump(obj) -> str:
    """Canonical text for anything ``parse`` returns."""
    if isinstance(obj, TheoryPresentation):
        return dump_theory(obj)
    if isinstance(obj, FiniteSite):
        return dump_site(obj)
    if isinstance(obj, Presheaf):
        return dump_presheaf(obj)
    if isinstance(obj, FinCategory):
        return dump_category(obj)
    if isinstance(obj, FibFile):
        return dump_fib(obj)
    if isinstance(obj, KernelFile):
        return dump_kernels(obj)
    raise TypeError(f"cannot print {type(obj).__name__}")


def load(path: str, kind: str | None = None):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), kind)
