"""Problem-definition files: a sectioned text format building oracles,
regions, and schemes.

    # comments start with '#'
    [function] f1
    dim: 1
    body: 1/(1-x) if x < 1 else inf
    subgrad_kind: none            # or: smooth

    [set] omega
    dim: 2
    contains: y >= x^2
    dist: ...                     # optional expression
    normal_kind: none             # or: box(lo...; hi...), halfspace(n...; c)

    [region] U
    kind: open_ball(0; 1)         # closed_ball(cx ...; r), box(lo hi; lo hi; ...),
                                  # all(dim; halfwidth), set(NAME; lo hi; ...)

    [scheme] main
    levels: 8
    eta0: 0.25
    seed: 0

    [map] F                       # for chain-rule checks
    dim_in: 1
    dim_out: 2
    body: x, x^2

    [control] oc                  # sparse-control instances
    weights: 0.25 0.25 0.25 0.25
    xa: -1 -1 -1 -1
    xb: 1 1 1 1
    sigma: 1.0
    sigma0: 0.1
    z: 0.5 -2 0 1.4

Function bodies use the expression language of :mod:`decoupling_lab.expr`.
A parsed problem serializes back to an equivalent file (round-trip tested).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ProblemSyntaxError, UndefinedSymbol
from .expr import compile_expression, parse_expression, serialize
from .geometry import Region
from .oracles import FnOracle, SetOracle
from .sampling import SampleScheme

__all__ = ["Problem", "parse_problem", "parse_problem_text", "serialize_problem"]


@dataclass
class Problem:
    functions: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)
    schemes: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    controls: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)  # (kind, name) -> raw key/value text

    def function(self, name: str) -> FnOracle:
        return self._get(self.functions, name, "function")

    def set_oracle(self, name: str) -> SetOracle:
        return self._get(self.sets, name, "set")

    def region(self, name: str) -> Region:
        return self._get(self.regions, name, "region")

    def scheme(self, name: Optional[str] = None) -> SampleScheme:
        if name is None:
            if self.schemes:
                return next(iter(self.schemes.values()))
            return SampleScheme()
        return self._get(self.schemes, name, "scheme")

    @staticmethod
    def _get(table, name, kind):
        if name not in table:
            raise UndefinedSymbol(f"no {kind} named {name!r}; known: {sorted(table)}")
        return table[name]


_SECTION_RE = re.compile(r"^\[(function|set|region|scheme|map|control)\]\s+([A-Za-z_][\w.-]*)\s*$")


def _split_sections(text: str):
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _SECTION_RE.match(line.strip())
        if m:
            if current is not None:
                yield current
            current = {"kind": m.group(1), "name": m.group(2), "line": lineno, "entries": []}
            continue
        if current is None:
            raise ProblemSyntaxError("content before the first section header", lineno, 1,
                                     line.strip()[:20])
        if ":" not in line:
            raise ProblemSyntaxError("expected 'key: value'", lineno, 1, line.strip()[:20])
        key, val = line.split(":", 1)
        current["entries"].append((key.strip(), val.strip(), lineno))
    if current is not None:
        yield current


def _entries_dict(section):
    d = {}
    for key, val, lineno in section["entries"]:
        if key in d:
            raise ProblemSyntaxError(f"duplicate key {key!r}", lineno, 1, key)
        d[key] = (val, lineno)
    return d


def _floats(text: str, lineno: int):
    try:
        return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]
    except ValueError as e:
        raise ProblemSyntaxError(f"expected numbers: {e}", lineno, 1, text[:20]) from e


def _build_function(section) -> FnOracle:
    d = _entries_dict(section)
    if "dim" not in d or "body" not in d:
        raise ProblemSyntaxError("function needs 'dim' and 'body'", section["line"], 1,
                                 section["name"])
    dim = int(d["dim"][0])
    body, lineno = d["body"]
    ast = parse_expression(body, line0=lineno)
    ev = compile_expression(ast, dim)
    subgrad = None
    kind = d.get("subgrad_kind", ("none", 0))[0]
    if kind == "smooth":
        def subgrad(point, _ev=ev, _dim=dim):
            from .dualsets import point_set

            x = np.asarray(point, dtype=float).ravel()
            h = 1e-6
            g = np.empty(_dim)
            for i in range(_dim):
                e = np.zeros(_dim)
                e[i] = h
                g[i] = (_ev((x + e)[None, :])[0] - _ev((x - e)[None, :])[0]) / (2 * h)
            return point_set(g)
    elif kind != "none":
        raise ProblemSyntaxError(f"unknown subgrad_kind {kind!r}", section["line"], 1, kind)
    fn = FnOracle(dim, ev, subgrad=subgrad, name=section["name"])
    fn._ast = ast  # retained for serialization
    return fn


def _build_set(section) -> SetOracle:
    d = _entries_dict(section)
    if "dim" not in d or "contains" not in d:
        raise ProblemSyntaxError("set needs 'dim' and 'contains'", section["line"], 1,
                                 section["name"])
    dim = int(d["dim"][0])
    ast = parse_expression(d["contains"][0], line0=d["contains"][1])
    contains_raw = compile_expression(ast, dim)

    def contains(pts):
        return np.asarray(contains_raw(pts), dtype=bool)

    dist = None
    dist_ast = None
    if "dist" in d:
        dist_ast = parse_expression(d["dist"][0], line0=d["dist"][1])
        dist_fn = compile_expression(dist_ast, dim)

        def dist(pts):
            return np.clip(dist_fn(pts), 0.0, None)

    normal_cone = None
    nk = d.get("normal_kind", ("none", 0))[0]
    if nk.startswith("box("):
        parts = nk[4:-1].split(";")
        lo = np.array(_floats(parts[0], section["line"]))
        hi = np.array(_floats(parts[1], section["line"]))

        def normal_cone(point):
            from .subdifferential import box_normal_cone

            return box_normal_cone(lo, hi, point)
    elif nk.startswith("halfspace("):
        parts = nk[10:-1].split(";")
        nvec = np.array(_floats(parts[0], section["line"]))
        c = float(parts[1])

        def normal_cone(point):
            from .dualsets import point_set, ray_set

            x = np.asarray(point, dtype=float)
            if x @ nvec < c - 1e-12:
                return point_set(np.zeros_like(nvec))
            return ray_set(np.zeros_like(nvec), nvec)
    elif nk != "none":
        raise ProblemSyntaxError(f"unknown normal_kind {nk!r}", section["line"], 1, nk)
    so = SetOracle(dim, contains, dist, None, normal_cone, name=section["name"])
    so._ast = ast
    so._dist_ast = dist_ast
    return so


_REGION_RE = re.compile(r"^(open_ball|closed_ball|box|all|set|interval)\s*\((.*)\)\s*$")


def _build_region(section, sets) -> Region:
    d = _entries_dict(section)
    if "kind" not in d:
        raise ProblemSyntaxError("region needs 'kind'", section["line"], 1, section["name"])
    text, lineno = d["kind"]
    m = _REGION_RE.match(text)
    if not m:
        raise ProblemSyntaxError("unrecognized region kind", lineno, 1, text[:30])
    kind, inner = m.group(1), m.group(2)
    parts = [p for p in inner.split(";")]
    if kind in ("open_ball", "closed_ball"):
        center = _floats(parts[0], lineno)
        radius = float(parts[1])
        ctor = Region.open_ball if kind == "open_ball" else Region.closed_ball
        return ctor(center, radius, label=section["name"])
    if kind == "interval":
        lo, hi = _floats(parts[0], lineno)[:2]
        return Region.box([lo], [hi], label=section["name"])
    if kind == "box":
        lo, hi = [], []
        for p in parts:
            a, b = _floats(p, lineno)[:2]
            lo.append(a)
            hi.append(b)
        return Region.box(lo, hi, label=section["name"])
    if kind == "all":
        vals = _floats(parts[0], lineno)
        dim = int(vals[0])
        halfwidth = float(parts[1]) if len(parts) > 1 else 8.0
        return Region.whole_space(dim, halfwidth, label=section["name"])
    name = parts[0].strip()
    if name not in sets:
        raise UndefinedSymbol(f"region references unknown set {name!r}")
    lo, hi = [], []
    for p in parts[1:]:
        a, b = _floats(p, lineno)[:2]
        lo.append(a)
        hi.append(b)
    if len(lo) != sets[name].dim:
        raise DimensionMismatch(
            f"bounding box has {len(lo)} axes, set {name!r} has dimension {sets[name].dim}")
    return Region.from_set(sets[name], lo, hi, label=section["name"])


_SCHEME_KEYS = {"mode": str, "seed": int, "levels": int, "eta0": float, "eta_factor": float,
                "mesh_ratio": float, "boundary_layers": int, "center_layers": int,
                "max_axis_points": int, "max_total_points": int, "lowdisc_count": int}


def _build_scheme(section) -> SampleScheme:
    kw = {}
    for key, (val, lineno) in _entries_dict(section).items():
        if key not in _SCHEME_KEYS:
            raise ProblemSyntaxError(f"unknown scheme key {key!r}", lineno, 1, key)
        kw[key] = _SCHEME_KEYS[key](val)
    return SampleScheme(**kw)


def _build_map(section):
    from .subdifferential import SmoothMap

    d = _entries_dict(section)
    for need in ("dim_in", "dim_out", "body"):
        if need not in d:
            raise ProblemSyntaxError(f"map needs {need!r}", section["line"], 1, section["name"])
    dim_in = int(d["dim_in"][0])
    dim_out = int(d["dim_out"][0])
    body, lineno = d["body"]
    comps = [parse_expression(c, line0=lineno) for c in body.split(",")]
    if len(comps) != dim_out:
        raise DimensionMismatch(f"map body has {len(comps)} components, dim_out is {dim_out}")
    fns = [compile_expression(c, dim_in) for c in comps]

    def ev(pts):
        return np.stack([f(pts) for f in fns], axis=1)

    return SmoothMap(dim_in, dim_out, ev, name=section["name"])


def _build_control(section):
    from .sparse_control import CellSpace, OCProblem, separable_quadratic

    d = _entries_dict(section)
    for need in ("weights", "xa", "xb", "sigma", "sigma0", "z"):
        if need not in d:
            raise ProblemSyntaxError(f"control needs {need!r}", section["line"], 1,
                                     section["name"])
    w = np.array(_floats(*d["weights"]))
    xa = np.array(_floats(*d["xa"]))
    xb = np.array(_floats(*d["xb"]))
    z = np.array(_floats(*d["z"]))
    if not (len(w) == len(xa) == len(xb) == len(z)):
        raise DimensionMismatch("control vectors must share one length")
    space = CellSpace(weights=w)
    f = separable_quadratic(space, float(d["sigma"][0]), float(d["sigma0"][0]), z)
    return OCProblem(space=space, f=f, xa=xa, xb=xb)


def parse_problem_text(text: str) -> Problem:
    prob = Problem()
    for section in _split_sections(text):
        kind, name = section["kind"], section["name"]
        if name in prob.sources.get(kind, {}):
            raise ProblemSyntaxError(f"duplicate {kind} {name!r}", section["line"], 1, name)
        if kind == "function":
            prob.functions[name] = _build_function(section)
        elif kind == "set":
            prob.sets[name] = _build_set(section)
        elif kind == "region":
            prob.regions[name] = _build_region(section, prob.sets)
        elif kind == "scheme":
            prob.schemes[name] = _build_scheme(section)
        elif kind == "map":
            prob.maps[name] = _build_map(section)
        elif kind == "control":
            prob.controls[name] = _build_control(section)
        prob.sources.setdefault(kind, {})[name] = section["entries"]
    return prob


def parse_problem(path) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_text(fh.read())


def serialize_problem(prob: Problem) -> str:
    """Emit a canonical problem file for the parsed functions and sets."""
    chunks = []
    for name, fn in prob.functions.items():
        chunks.append(f"[function] {name}\ndim: {fn.dim}\nbody: {serialize(fn._ast)}\n")
    for name, so in prob.sets.items():
        lines = [f"[set] {name}", f"dim: {so.dim}", f"contains: {serialize(so._ast)}"]
        if getattr(so, "_dist_ast", None) is not None:
            lines.append(f"dist: {serialize(so._dist_ast)}")
        chunks.append("\n".join(lines) + "\n")
    return "\n".join(chunks)
