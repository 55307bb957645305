"""Text configuration files for wave speeds, fields and attenuation.

Grammar (blank lines and text after '#' are ignored)::

    R = 0.2
    [segment]
    a = 0.2, b = 0.6, coeffs = [1.1]
    [segment]
    a = 0.6
    b = 1.0
    coeffs = [1.0, 0.0, 0.0, 0.0]

Key-value pairs may share a line when separated by commas.  Field files use
``[mode]`` sections with ``k``, ``re`` and optionally ``im`` (polynomial
coefficients in r, increasing powers).  Attenuation files hold ``lambda =
[...]`` and optionally ``lipschitz``.
"""
import ast
import hashlib
import re

import numpy as np

from .transforms import AttenuationProfile, FourierField
from .wave_speed import WaveSpeed


class ConfigError(ValueError):
    """The configuration text cannot be parsed or fails a range check."""


_PAIR = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\[[^\]]*\]|[^,]+)\s*(?:,|$)")


def _value(text, key):
    try:
        v = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"cannot read value of {key!r}: {text.strip()!r}") from exc
    if isinstance(v, (list, tuple)):
        if not all(isinstance(x, (int, float)) for x in v):
            raise ConfigError(f"{key!r} must be a list of numbers")
        return [float(x) for x in v]
    if isinstance(v, (int, float)):
        return float(v)
    raise ConfigError(f"{key!r} must be a number or a list of numbers")


def parse_sections(text):
    """[(section name or None, {key: value})] in file order."""
    sections = [(None, {})]
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
        if m:
            sections.append((m.group(1).lower(), {}))
            continue
        pos = 0
        while pos < len(line):
            pm = _PAIR.match(line, pos)
            if not pm or pm.end() == pos:
                raise ConfigError(f"line {lineno}: cannot parse {line[pos:]!r}")
            key = pm.group(1)
            if key in sections[-1][1]:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            sections[-1][1][key] = _value(pm.group(2), key)
            pos = pm.end()
    return sections


def _require(d, key, where):
    if key not in d:
        raise ConfigError(f"{where}: missing {key!r}")
    return d[key]


def parse_profile(text):
    """WaveSpeed from profile text; construction errors are reported as ConfigError."""
    secs = parse_sections(text)
    head = secs[0][1]
    R = _require(head, "R", "header")
    if not isinstance(R, float) or not 0.0 < R < 1.0:
        raise ConfigError("R must be a number in (0, 1)")
    segs = []
    for name, d in secs[1:]:
        if name != "segment":
            raise ConfigError(f"unknown section [{name}] in a profile")
        a, b = _require(d, "a", "[segment]"), _require(d, "b", "[segment]")
        co = _require(d, "coeffs", "[segment]")
        if isinstance(co, float):
            co = [co]
        extra = set(d) - {"a", "b", "coeffs"}
        if extra:
            raise ConfigError(f"[segment]: unknown keys {sorted(extra)}")
        segs.append((a, b, co))
    if not segs:
        raise ConfigError("a profile needs at least one [segment]")
    try:
        return WaveSpeed(R, segs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_field(text, R, kmax=None):
    """FourierField of polynomial modes from [mode] sections."""
    modes = {}
    for name, d in parse_sections(text)[1:]:
        if name != "mode":
            raise ConfigError(f"unknown section [{name}] in a field file")
        k = _require(d, "k", "[mode]")
        if not float(k).is_integer():
            raise ConfigError("mode index k must be an integer")
        k = int(k)
        re_ = d.get("re", [0.0])
        im_ = d.get("im", [0.0])
        re_ = [re_] if isinstance(re_, float) else re_
        im_ = [im_] if isinstance(im_, float) else im_
        n = max(len(re_), len(im_))
        c = np.zeros(n, dtype=complex)
        c[: len(re_)] += re_
        c[: len(im_)] += 1j * np.asarray(im_)
        if k in modes:
            raise ConfigError(f"mode k={k} given twice")
        if kmax is None or abs(k) <= kmax:
            modes[k] = np.polynomial.Polynomial(c)
    if not modes:
        raise ConfigError("field file defines no modes (within --kmax)")
    return FourierField(modes, R)


def parse_attenuation(text):
    head = parse_sections(text)[0][1]
    co = _require(head, "lambda", "attenuation")
    co = [co] if isinstance(co, float) else co
    poly = np.polynomial.Polynomial(co)
    lip = head.get("lipschitz")
    try:
        return AttenuationProfile(poly, lip)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(*parts):
    """sha256 over the given strings, used to tag output files."""
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\0")
    return h.hexdigest()
