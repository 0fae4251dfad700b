"""YAML job configuration with line-precise validation errors.

Layout::

    gram: [[...], ...]            # integer Gram matrix, signature (n, 2)
    cusps:                        # optional
      - label: P
        T: [[...], ...]           # integer monodromy matrix
        model:                    # optional R-split orbit data
          e21: {re: [...], im: [...]}   # type II
          e22: [...]                    # type III
    zplus:                        # optional holomorphic generating-series input
      - {m: "1/4", class: 1, value: "3/2"}
    options:
      m_max: 4
      w_max: 12
      tol: 1e-6
      tau_samples: [[0, 1], [0.25, 1.5]]
      precision: 12
      residue: {y: 1, m: 0, class: 0, Y: [8, 16, 32, 64], tol: 0.02}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from .errors import ConfigError, KMBoundaryError
from .quadlattice import Lattice, make_lattice, signature


class _Map(dict):
    line: int = 0
    key_lines: dict

    def at(self, key) -> int:
        return self.key_lines.get(key, self.line)


class _Seq(list):
    line: int = 0
    item_lines: list

    def at(self, i: int) -> int:
        return self.item_lines[i] if i < len(self.item_lines) else self.line


class _Scalar:
    __slots__ = ("value", "line")

    def __init__(self, value, line: int):
        self.value = value
        self.line = line


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _convert(node: yaml.Node, constructor: yaml.constructor.SafeConstructor):
    if isinstance(node, yaml.MappingNode):
        out = _Map()
        out.line = _line(node)
        out.key_lines = {}
        for k, v in node.value:
            key = constructor.construct_object(k)
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", _line(k))
            out[key] = _convert(v, constructor)
            out.key_lines[key] = _line(v)
        return out
    if isinstance(node, yaml.SequenceNode):
        out = _Seq(_convert(v, constructor) for v in node.value)
        out.line = _line(node)
        out.item_lines = [_line(v) for v in node.value]
        return out
    return _Scalar(constructor.construct_object(node), _line(node))


def _parse(text: str):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax: {exc.problem}", mark.line + 1 if mark else None) from exc
    if node is None:
        raise ConfigError("empty configuration", 1)
    return _convert(node, yaml.SafeLoader(""))


# ------------------------------------------------------------ typed accessors


def _expect_map(x, what: str, line: int) -> _Map:
    if not isinstance(x, _Map):
        raise ConfigError(f"{what} must be a mapping", getattr(x, "line", line))
    return x


def _expect_seq(x, what: str, line: int) -> _Seq:
    if not isinstance(x, _Seq):
        raise ConfigError(f"{what} must be a list", getattr(x, "line", line))
    return x


def _rational(x, what: str, line: int) -> Fraction:
    if not isinstance(x, _Scalar) or isinstance(x.value, bool):
        raise ConfigError(f"{what} must be a number", getattr(x, "line", line))
    try:
        return Fraction(str(x.value)) if not isinstance(x.value, float) else Fraction(x.value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: cannot read {x.value!r} as a rational", x.line) from exc


def _integer(x, what: str, line: int) -> int:
    if not isinstance(x, _Scalar) or isinstance(x.value, bool) or not isinstance(x.value, int):
        raise ConfigError(f"{what} must be an integer", getattr(x, "line", line))
    return x.value


def _real(x, what: str, line: int) -> float:
    if not isinstance(x, _Scalar) or isinstance(x.value, bool):
        raise ConfigError(f"{what} must be a number", getattr(x, "line", line))
    try:
        return float(x.value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: cannot read {x.value!r} as a number", x.line) from exc


def _int_matrix(x, what: str, line: int, size: int | None = None) -> list[list[int]]:
    rows = _expect_seq(x, what, line)
    if not rows:
        raise ConfigError(f"{what} is empty", rows.line)
    out = []
    for i, row in enumerate(rows):
        row = _expect_seq(row, f"{what} row {i}", rows.at(i))
        out.append([_integer(v, f"{what}[{i}][{j}]", row.at(j)) for j, v in enumerate(row)])
    n = len(out)
    if any(len(r) != n for r in out):
        raise ConfigError(f"{what} must be square", rows.line)
    if size is not None and n != size:
        raise ConfigError(f"{what} must be {size}x{size}", rows.line)
    return out


def _rat_vector(x, what: str, line: int, size: int) -> tuple:
    seq = _expect_seq(x, what, line)
    if len(seq) != size:
        raise ConfigError(f"{what} must have length {size}", seq.line)
    return tuple(_rational(v, f"{what}[{i}]", seq.at(i)) for i, v in enumerate(seq))


def _check_keys(m: _Map, allowed: set, what: str) -> None:
    for k in m:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {what}", m.at(k))


# ------------------------------------------------------------ schema


@dataclass
class CuspConfig:
    label: str
    T: list
    line: int
    e21: tuple | None = None
    e22: tuple | None = None


@dataclass
class ResidueOptions:
    y: float = 1.0
    m: Fraction = Fraction(0)
    cls: int = 0
    Ys: tuple = (8, 16, 32, 64)
    tol: float = 0.02


@dataclass
class JobConfig:
    lattice: Lattice
    cusps: list = field(default_factory=list)
    zplus: list | None = None  # [(m, class, value)]
    m_max: Fraction = Fraction(4)
    w_max: Fraction = Fraction(12)
    tol: float = 1e-6
    tau_samples: list = field(default_factory=lambda: [complex(0, 1), complex(1 / 3, 1), complex(0, 2)])
    precision: int = 12
    residue: ResidueOptions = field(default_factory=ResidueOptions)


def _cusp(x, i: int, line: int, n: int) -> CuspConfig:
    m = _expect_map(x, f"cusps[{i}]", line)
    _check_keys(m, {"label", "T", "model"}, f"cusps[{i}]")
    if "T" not in m:
        raise ConfigError(f"cusps[{i}] needs T", m.line)
    label = m.get("label")
    label = str(label.value) if isinstance(label, _Scalar) else f"cusp{i}"
    T = _int_matrix(m["T"], f"cusps[{i}].T", m.at("T"), n)
    out = CuspConfig(label, T, m.line)
    if "model" in m:
        mod = _expect_map(m["model"], f"cusps[{i}].model", m.at("model"))
        _check_keys(mod, {"e21", "e22"}, f"cusps[{i}].model")
        if "e21" in mod:
            e = _expect_map(mod["e21"], "e21", mod.at("e21"))
            _check_keys(e, {"re", "im"}, "e21")
            re = _rat_vector(e.get("re"), "e21.re", e.at("re"), n)
            im = _rat_vector(e.get("im"), "e21.im", e.at("im"), n)
            out.e21 = (re, im)
        if "e22" in mod:
            out.e22 = _rat_vector(mod["e22"], "e22", mod.at("e22"), n)
    return out


def parse_config(text: str) -> JobConfig:
    root = _expect_map(_parse(text), "configuration", 1)
    _check_keys(root, {"gram", "cusps", "zplus", "options"}, "configuration")
    if "gram" not in root:
        raise ConfigError("missing gram", root.line)
    gram = _int_matrix(root["gram"], "gram", root.at("gram"))
    try:
        L = make_lattice(gram, "L")
    except KMBoundaryError as exc:
        raise ConfigError(str(exc), root.at("gram")) from exc
    if L.rank < 3:
        raise ConfigError("gram must have rank >= 3", root.at("gram"))
    if signature(L)[1] != 2:
        raise ConfigError(f"gram has signature {signature(L)}, expected (n, 2)", root.at("gram"))
    n = L.rank
    job = JobConfig(L)

    if "cusps" in root:
        seq = _expect_seq(root["cusps"], "cusps", root.at("cusps"))
        job.cusps = [_cusp(c, i, seq.at(i), n) for i, c in enumerate(seq)]
        labels = [c.label for c in job.cusps]
        for i, lab in enumerate(labels):
            if labels.index(lab) != i:
                raise ConfigError(f"duplicate cusp label {lab!r}", seq.at(i))

    if "zplus" in root:
        seq = _expect_seq(root["zplus"], "zplus", root.at("zplus"))
        job.zplus = []
        for i, e in enumerate(seq):
            e = _expect_map(e, f"zplus[{i}]", seq.at(i))
            _check_keys(e, {"m", "class", "value"}, f"zplus[{i}]")
            for k in ("m", "class", "value"):
                if k not in e:
                    raise ConfigError(f"zplus[{i}] needs {k}", e.line)
            job.zplus.append(
                (
                    _rational(e["m"], "zplus.m", e.at("m")),
                    _integer(e["class"], "zplus.class", e.at("class")),
                    _rational(e["value"], "zplus.value", e.at("value")),
                )
            )

    if "options" in root:
        o = _expect_map(root["options"], "options", root.at("options"))
        _check_keys(o, {"m_max", "w_max", "tol", "tau_samples", "precision", "residue"}, "options")
        if "m_max" in o:
            job.m_max = _rational(o["m_max"], "m_max", o.at("m_max"))
        if "w_max" in o:
            job.w_max = _rational(o["w_max"], "w_max", o.at("w_max"))
        if "tol" in o:
            job.tol = _real(o["tol"], "tol", o.at("tol"))
        if "precision" in o:
            job.precision = _integer(o["precision"], "precision", o.at("precision"))
        if "tau_samples" in o:
            seq = _expect_seq(o["tau_samples"], "tau_samples", o.at("tau_samples"))
            taus = []
            for i, t in enumerate(seq):
                t = _expect_seq(t, f"tau_samples[{i}]", seq.at(i))
                if len(t) != 2:
                    raise ConfigError("tau sample must be [x, y]", t.line)
                x, y = _real(t[0], "tau.x", t.at(0)), _real(t[1], "tau.y", t.at(1))
                if y <= 0:
                    raise ConfigError("tau sample needs y > 0", t.at(1))
                taus.append(complex(x, y))
            job.tau_samples = taus
        if "residue" in o:
            r = _expect_map(o["residue"], "residue", o.at("residue"))
            _check_keys(r, {"y", "m", "class", "Y", "tol"}, "residue")
            res = ResidueOptions()
            if "y" in r:
                res.y = _real(r["y"], "residue.y", r.at("y"))
            if "m" in r:
                res.m = _rational(r["m"], "residue.m", r.at("m"))
            if "class" in r:
                res.cls = _integer(r["class"], "residue.class", r.at("class"))
            if "tol" in r:
                res.tol = _real(r["tol"], "residue.tol", r.at("tol"))
            if "Y" in r:
                seq = _expect_seq(r["Y"], "residue.Y", r.at("Y"))
                res.Ys = tuple(_real(v, "residue.Y", seq.at(i)) for i, v in enumerate(seq))
            job.residue = res
    if job.m_max < 0:
        raise ConfigError("m_max must be non-negative", root.line)
    return job


def load_config(path: str | Path) -> JobConfig:
    return parse_config(Path(path).read_text())
