"""Cavity parameter tables and the scenario presets built from them.

``RAW_TABLES`` is a plain-text transcription of the published parameter
tables. Rows are ``key | column | column ...``; a cell ``cf. X`` repeats that
column from variant ``X``; single values broadcast over all cavities. Keys may
be exact labels, comma lists, closed ranges ``a -- b`` or ``!= x``.
``CAVITY_TABLES`` holds the same data expanded by hand; the test suite checks
the two against each other and pins the checksum of the raw text.
"""
from __future__ import annotations

import hashlib
import re

RAW_TABLES = """\
table fig1 | units J | L 4
variants a; b; c<0.275; c>=0.275
key | site | g | delta_hw | E | kappa | d
a | 1, 5, 15, 4 | 0.8 | 1.9, 1.85, 1.43, 1.9 | 0.4, 0.5, 1.0, 0.5 | 0.04, 0.05, 0.1, 0.05 | 0.13, 0.17, 0.4, 0.15
b | 1, 0, 4, 5 | 0.8 | 1.9, 1.85, 1.57, 1.9 | 0.4, 0.5, 0.7, 0.4 | 0.04, 0.05, 0.07, 0.04 | 0.13, 0.16, 0.26, 0.14
c<0.275 | cf. a | cf. a | cf. a | cf. a | cf. a | cf. a
c>=0.275 | cf. a | cf. a | cf. a | cf. a | 0.03, 0.05, 0.1, 0.05 | 0.1, 0.17, 0.4, 0.15

table fig2b | units J_eff | L 8
variants 0 -- 0.375; 0.5 -- 1.875; 2.0, 2.375, 2.5; 2.125
key | site | g
0 -- 0.375 | 9, 17, 10, 25, 11, 18, 1, 8 | 0.37, 0.31, 0.31, 0.45, 0.45, 0.4, 0.6, 0.6
0.5 -- 1.875 | cf. 0 -- 0.375 | 0.37, 0.31, 0.31, 0.45, 0.45, 0.4, 0.67, 0.67
2.0, 2.375, 2.5 | cf. 0 -- 0.375 | 0.37, 0.31, 0.31, 0.45, 0.45, 0.45, 0.75, 0.75
2.125 | 9, 17, 10, 25, 11, 18, 1, 8, 26, 19 | 0.4, 0.31, 0.31, 0.5, 0.5, 0.31, 0.83, 0.83, 0.35, 0.35
key | delta_hw | kappa
!= 2.125 | 1.83, 2.83, 2.83, 1.73, 1.73, 1.83, 1.83, 1.83 | 0.024, 0.015, 0.015, 0.04, 0.04, 0.023, 0.023, 0.023
2.125 | 1.83, 2.83, 2.83, 1.73, 1.73, 1.83, 1.83, 1.83, 1.83, 1.83 | 0.024, 0.015, 0.015, 0.04, 0.04, 0.016, 0.023, 0.023, 0.016, 0.016
key | E | d
!= 2.125 | 0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4 | 0.0723, 0.05, 0.05, 0.135, 0.135, 0.0723, 0.0723, 0.0723
2.125 | 0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4, 0.4, 0.4 | 0.0723, 0.05, 0.05, 0.135, 0.135, 0.05, 0.0723, 0.0723, 0.05, 0.05

table fig2a | units J | L 6
variants 0; 0.05; 0.1; 0.15; 0.2; 0.25; 0.3; 0.5; 0.55; 0.6; 0.65; 0.7; 0.75; 0.8; 0.85; 0.9
key | site | kappa | d
0 -- 0.05 | 7, 13, 8, 1, 6, 2, 12 | 0.021, 0.03, 0.03, 0.02, 0.06, 0.021, 0.021 | 0.062, 0.09, 0.09, 0.062, 0.18, 0.062, 0.062
0.1 -- 0.15 | cf. 0 | 0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021 | 0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062
0.2 | 7, 13, 8, 1, 6, 2, 12, 14 | 0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021, 0.023 | 0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062, 0.07
0.25 | 7, 13, 2, 8, 6, 1, 12, 14 | cf. 0.2 | cf. 0.2
0.3 | cf. 0.25 | 0.01, 0.03, 0.03, 0.01, 0.06, 0.021, 0.021, 0.016 | 0.03, 0.09, 0.09, 0.03, 0.18, 0.062, 0.062, 0.05
0.5 | 7, 13, 8, 1, 6, 14, 2 | 0.011, 0.02, 0.02, 0.04, 0.04, 0.03, 0.033 | 0.035, 0.06, 0.06, 0.12, 0.12, 0.09, 0.11
0.55 | 7, 13, 8, 1, 6, 14 | 0.011, 0.02, 0.02, 0.04, 0.04, 0.03 | 0.035, 0.06, 0.06, 0.12, 0.12, 0.091
0.6 -- 0.65 | 7, 14, 8, 1, 6, 13 | 0.014, 0.027, 0.027, 0.04, 0.04, 0.035 | 0.042, 0.085, 0.085, 0.12, 0.12, 0.105
0.70 | cf. 0.6 | 0.0143, 0.028, 0.028, 0.04, 0.04, 0.046 | 0.044, 0.085, 0.085, 0.13, 0.13, 0.14
0.75 | cf. 0.6 | 0.0143, 0.027, 0.027, 0.05, 0.05, 0.053 | 0.044, 0.084, 0.084, 0.15, 0.15, 0.16
0.8 | cf. 0.6 | 0.0143, 0.027, 0.027, 0.05, 0.05, 0.06 | 0.044, 0.084, 0.084, 0.15, 0.15, 0.18
0.85 | cf. 0.6 | cf. 0.8 | 0.044, 0.084, 0.084, 0.18, 0.18, 0.23
0.9 | 7, 14, 2, 1, 6, 13 | 0.013, 0.027, 0.027, 0.05, 0.05, 0.06 | 0.04, 0.08, 0.08, 0.20, 0.20, 0.25
key | g | delta_hw | E
0 | 0.35, 0.4, 0.4, 0.35, 0.8, 0.45, 0.45 | 1.8 | 0.36, 0.5, 0.5, 0.36, 0.73, 0.33, 0.33
0.05 | 0.35, 0.4, 0.4, 0.38, 0.8, 0.4, 0.4 | cf. 0 | cf. 0
0.1 | 0.3, 0.42, 0.42, 0.34, 0.8, 0.43, 0.43 | cf. 0 | cf. 0
0.15 | 0.3, 0.42, 0.42, 0.34, 0.8, 0.46, 0.46 | cf. 0 | cf. 0
0.2 | 0.3, 0.4, 0.4, 0.34, 0.8, 0.42, 0.42, 0.3 | cf. 0 | 0.36, 0.5, 0.5, 0.36, 0.73, 0.33, 0.33, 0.33
0.25 | 0.3, 0.4, 0.5, 0.3, 0.8, 0.42, 0.42, 0.34 | cf. 0 | cf. 0.2
0.3 | 0.2, 0.4, 0.5, 0.2, 0.8, 0.42, 0.42, 0.3 | cf. 0 | 0.25, 0.5, 0.5, 0.25, 0.73, 0.33, 0.33, 0.2
0.5 | 0.23, 0.4, 0.4, 0.5, 0.5, 0.3, 0.5 | 1.8, 1.8, 1.8, 1.61, 1.61, 1.8, 1.8 | 0.19, 0.23, 0.23, 0.6, 0.6, 0.5, 0.6
0.55 | 0.23, 0.43, 0.43, 0.5, 0.5, 0.3 | 1.8, 1.8, 1.8, 1.61, 1.61, 1.8 | 0.19, 0.23, 0.23, 0.6, 0.6, 0.5
0.6 -- 0.65 | 0.27, 0.3, 0.4, 0.53, 0.53, 0.4 | 1.8, 1.8, 1.8, 1.61, 1.61, 1.69 | 0.2, 0.4, 0.51, 0.6, 0.6, 0.55
0.65 | 0.27, 0.3, 0.4, 0.53, 0.53, 0.45 | cf. 0.6 | cf. 0.6
0.70 | 0.27, 0.27, 0.4, 0.53, 0.53, 0.5 | 1.8, 1.8, 1.8, 1.67, 1.67, 1.67 | 0.23, 0.51, 0.51, 0.7, 0.7, 0.8
0.75 | 0.25, 0.25, 0.4, 0.53, 0.53, 0.5 | cf. 0.70 | 0.27, 0.51, 0.51, 0.9, 0.9, 1
0.8 | 0.3, 0.25, 0.45, 0.56, 0.56, 0.53 | cf. 0.70 | 0.2, 0.51, 0.4, 0.9, 0.9, 1.2
0.85 | 0.3, 0.25, 0.45, 0.67, 0.67, 0.6 | cf. 0 | cf. 0.8
0.9 | 0.26, 0.23, 0.47, 0.69, 0.69, 0.63 | cf. 0.85 | cf. 0.8
"""

RAW_TABLES_SHA256 = "bece490968a87fb6826b1fe71a19ae4a278073f8929f5e2382c8cc42c07445a3"

COLUMNS = ("site", "g", "delta_hw", "E", "kappa", "d")


class PresetError(ValueError):
    pass


def _num(s: str):
    try:
        return float(s)
    except ValueError:
        return None


def _same(a: str, b: str) -> bool:
    fa, fb = _num(a), _num(b)
    if fa is not None and fb is not None:
        return fa == fb
    return a.strip() == b.strip()


def _match_rank(key: str, label: str):
    """Lower is more specific; None when the row does not apply to the variant."""
    key = key.strip()
    if _same(key, label):
        return 0
    if "," in key and any(_same(k, label) for k in key.split(",")):
        return 1
    m = re.fullmatch(r"(\S+)\s+--\s+(\S+)", key)
    v = _num(label)
    if m and v is not None and float(m.group(1)) <= v <= float(m.group(2)):
        return 2
    if key.startswith("!="):
        return None if _same(key[2:], label) else 3
    return None


def parse_tables(text: str = RAW_TABLES) -> dict:
    """``{family: {"units", "L", "variants": {label: [cavity dicts]}}}``."""
    families = {}
    for block in text.strip().split("\n\n"):
        lines = [ln for ln in block.splitlines() if ln.strip()]
        head = [p.strip() for p in lines[0].split("|")]
        name = head[0].split()[1]
        meta = dict(p.split(None, 1) for p in head[1:])
        labels = [v.strip() for v in lines[1].split(None, 1)[1].split(";")]
        parts, current = [], None
        for ln in lines[2:]:
            cells = [c.strip() for c in ln.split("|")]
            if cells[0] == "key":
                current = {"columns": cells[1:], "rows": []}
                parts.append(current)
            else:
                current["rows"].append((cells[0], cells[1:]))
        families[name] = {"units": meta["units"], "L": int(meta["L"]),
                          "variants": _resolve(labels, parts)}
    return families


def _resolve(labels, parts):
    raw = {}
    for lab in labels:
        cols = {}
        for part in parts:
            hits = [(r, cells) for key, cells in part["rows"] if (r := _match_rank(key, lab)) is not None]
            if not hits:
                raise PresetError(f"no row for variant {lab!r} in columns {part['columns']}")
            best = min(r for r, _ in hits)
            chosen = [c for r, c in hits if r == best]
            if len(chosen) > 1:
                raise PresetError(f"ambiguous rows for variant {lab!r}")
            cols.update(zip(part["columns"], chosen[0]))
        raw[lab] = cols

    def cell(lab, col, depth=0):
        if depth > 10:
            raise PresetError("circular cf. reference")
        val = raw[lab][col]
        if val.startswith("cf."):
            ref = val[3:].strip()
            target = next((l for l in raw if _same(l, ref)), None)
            if target is None:
                raise PresetError(f"cf. reference to unknown variant {ref!r}")
            return cell(target, col, depth + 1)
        return [float(x) for x in val.split(",")]

    out = {}
    for lab in labels:
        cols = {c: cell(lab, c) for c in COLUMNS}
        n = len(cols["site"])
        rows = []
        for i in range(n):
            row = {c: (v[0] if len(v) == 1 else v[i]) for c, v in cols.items()}
            row["site"] = int(row["site"])
            rows.append(row)
        for c, v in cols.items():
            if len(v) not in (1, n):
                raise PresetError(f"variant {lab!r}: column {c} has {len(v)} entries for {n} cavities")
        out[lab] = rows
    return out


def raw_checksum(text: str = RAW_TABLES) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _rows(site, g, delta_hw, E, kappa, d):
    n = len(site)
    bc = lambda v: list(v) if isinstance(v, (list, tuple)) else [v] * n
    return [dict(site=s, g=a, delta_hw=b, E=c, kappa=k, d=x)
            for s, a, b, c, k, x in zip(site, bc(g), bc(delta_hw), bc(E), bc(kappa), bc(d))]


_FIG1A = _rows([1, 5, 15, 4], 0.8, [1.9, 1.85, 1.43, 1.9], [0.4, 0.5, 1.0, 0.5],
               [0.04, 0.05, 0.1, 0.05], [0.13, 0.17, 0.4, 0.15])

_S7 = [7, 13, 8, 1, 6, 2, 12]
_S8 = [7, 13, 8, 1, 6, 2, 12, 14]
_S8b = [7, 13, 2, 8, 6, 1, 12, 14]
_S6 = [7, 14, 8, 1, 6, 13]
_E7 = [0.36, 0.5, 0.5, 0.36, 0.73, 0.33, 0.33]
_E8 = _E7 + [0.33]
_B2 = [0.0723, 0.05, 0.05, 0.135, 0.135, 0.0723, 0.0723, 0.0723]
_D2 = [1.83, 2.83, 2.83, 1.73, 1.73, 1.83, 1.83, 1.83]
_K2 = [0.024, 0.015, 0.015, 0.04, 0.04, 0.023, 0.023, 0.023]
_S2 = [9, 17, 10, 25, 11, 18, 1, 8]

CAVITY_TABLES = {
    "fig1": {"units": "J", "L": 4, "variants": {
        "a": _FIG1A,
        "b": _rows([1, 0, 4, 5], 0.8, [1.9, 1.85, 1.57, 1.9], [0.4, 0.5, 0.7, 0.4],
                   [0.04, 0.05, 0.07, 0.04], [0.13, 0.16, 0.26, 0.14]),
        "c<0.275": _FIG1A,
        "c>=0.275": _rows([1, 5, 15, 4], 0.8, [1.9, 1.85, 1.43, 1.9], [0.4, 0.5, 1.0, 0.5],
                          [0.03, 0.05, 0.1, 0.05], [0.1, 0.17, 0.4, 0.15]),
    }},
    "fig2b": {"units": "J_eff", "L": 8, "variants": {
        "0 -- 0.375": _rows(_S2, [0.37, 0.31, 0.31, 0.45, 0.45, 0.4, 0.6, 0.6], _D2, [0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4], _K2, _B2),
        "0.5 -- 1.875": _rows(_S2, [0.37, 0.31, 0.31, 0.45, 0.45, 0.4, 0.67, 0.67], _D2, [0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4], _K2, _B2),
        "2.0, 2.375, 2.5": _rows(_S2, [0.37, 0.31, 0.31, 0.45, 0.45, 0.45, 0.75, 0.75], _D2, [0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4], _K2, _B2),
        "2.125": _rows(_S2 + [26, 19], [0.4, 0.31, 0.31, 0.5, 0.5, 0.31, 0.83, 0.83, 0.35, 0.35],
                       _D2 + [1.83, 1.83], [0.4, 0.4, 0.4, 0.8, 0.8, 0.4, 0.4, 0.4, 0.4, 0.4],
                       [0.024, 0.015, 0.015, 0.04, 0.04, 0.016, 0.023, 0.023, 0.016, 0.016],
                       [0.0723, 0.05, 0.05, 0.135, 0.135, 0.05, 0.0723, 0.0723, 0.05, 0.05]),
    }},
    "fig2a": {"units": "J", "L": 6, "variants": {
        "0": _rows(_S7, [0.35, 0.4, 0.4, 0.35, 0.8, 0.45, 0.45], 1.8, _E7,
                   [0.021, 0.03, 0.03, 0.02, 0.06, 0.021, 0.021], [0.062, 0.09, 0.09, 0.062, 0.18, 0.062, 0.062]),
        "0.05": _rows(_S7, [0.35, 0.4, 0.4, 0.38, 0.8, 0.4, 0.4], 1.8, _E7,
                      [0.021, 0.03, 0.03, 0.02, 0.06, 0.021, 0.021], [0.062, 0.09, 0.09, 0.062, 0.18, 0.062, 0.062]),
        "0.1": _rows(_S7, [0.3, 0.42, 0.42, 0.34, 0.8, 0.43, 0.43], 1.8, _E7,
                     [0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021], [0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062]),
        "0.15": _rows(_S7, [0.3, 0.42, 0.42, 0.34, 0.8, 0.46, 0.46], 1.8, _E7,
                      [0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021], [0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062]),
        "0.2": _rows(_S8, [0.3, 0.4, 0.4, 0.34, 0.8, 0.42, 0.42, 0.3], 1.8, _E8,
                     [0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021, 0.023], [0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062, 0.07]),
        "0.25": _rows(_S8b, [0.3, 0.4, 0.5, 0.3, 0.8, 0.42, 0.42, 0.34], 1.8, _E8,
                      [0.018, 0.03, 0.03, 0.018, 0.06, 0.021, 0.021, 0.023], [0.055, 0.09, 0.09, 0.055, 0.18, 0.062, 0.062, 0.07]),
        "0.3": _rows(_S8b, [0.2, 0.4, 0.5, 0.2, 0.8, 0.42, 0.42, 0.3], 1.8, [0.25, 0.5, 0.5, 0.25, 0.73, 0.33, 0.33, 0.2],
                     [0.01, 0.03, 0.03, 0.01, 0.06, 0.021, 0.021, 0.016], [0.03, 0.09, 0.09, 0.03, 0.18, 0.062, 0.062, 0.05]),
        "0.5": _rows([7, 13, 8, 1, 6, 14, 2], [0.23, 0.4, 0.4, 0.5, 0.5, 0.3, 0.5], [1.8, 1.8, 1.8, 1.61, 1.61, 1.8, 1.8],
                     [0.19, 0.23, 0.23, 0.6, 0.6, 0.5, 0.6], [0.011, 0.02, 0.02, 0.04, 0.04, 0.03, 0.033],
                     [0.035, 0.06, 0.06, 0.12, 0.12, 0.09, 0.11]),
        "0.55": _rows([7, 13, 8, 1, 6, 14], [0.23, 0.43, 0.43, 0.5, 0.5, 0.3], [1.8, 1.8, 1.8, 1.61, 1.61, 1.8],
                      [0.19, 0.23, 0.23, 0.6, 0.6, 0.5], [0.011, 0.02, 0.02, 0.04, 0.04, 0.03],
                      [0.035, 0.06, 0.06, 0.12, 0.12, 0.091]),
        "0.6": _rows(_S6, [0.27, 0.3, 0.4, 0.53, 0.53, 0.4], [1.8, 1.8, 1.8, 1.61, 1.61, 1.69], [0.2, 0.4, 0.51, 0.6, 0.6, 0.55],
                     [0.014, 0.027, 0.027, 0.04, 0.04, 0.035], [0.042, 0.085, 0.085, 0.12, 0.12, 0.105]),
        "0.65": _rows(_S6, [0.27, 0.3, 0.4, 0.53, 0.53, 0.45], [1.8, 1.8, 1.8, 1.61, 1.61, 1.69], [0.2, 0.4, 0.51, 0.6, 0.6, 0.55],
                      [0.014, 0.027, 0.027, 0.04, 0.04, 0.035], [0.042, 0.085, 0.085, 0.12, 0.12, 0.105]),
        "0.7": _rows(_S6, [0.27, 0.27, 0.4, 0.53, 0.53, 0.5], [1.8, 1.8, 1.8, 1.67, 1.67, 1.67], [0.23, 0.51, 0.51, 0.7, 0.7, 0.8],
                     [0.0143, 0.028, 0.028, 0.04, 0.04, 0.046], [0.044, 0.085, 0.085, 0.13, 0.13, 0.14]),
        "0.75": _rows(_S6, [0.25, 0.25, 0.4, 0.53, 0.53, 0.5], [1.8, 1.8, 1.8, 1.67, 1.67, 1.67], [0.27, 0.51, 0.51, 0.9, 0.9, 1.0],
                      [0.0143, 0.027, 0.027, 0.05, 0.05, 0.053], [0.044, 0.084, 0.084, 0.15, 0.15, 0.16]),
        "0.8": _rows(_S6, [0.3, 0.25, 0.45, 0.56, 0.56, 0.53], [1.8, 1.8, 1.8, 1.67, 1.67, 1.67], [0.2, 0.51, 0.4, 0.9, 0.9, 1.2],
                     [0.0143, 0.027, 0.027, 0.05, 0.05, 0.06], [0.044, 0.084, 0.084, 0.15, 0.15, 0.18]),
        "0.85": _rows(_S6, [0.3, 0.25, 0.45, 0.67, 0.67, 0.6], 1.8, [0.2, 0.51, 0.4, 0.9, 0.9, 1.2],
                      [0.0143, 0.027, 0.027, 0.05, 0.05, 0.06], [0.044, 0.084, 0.084, 0.18, 0.18, 0.23]),
        "0.9": _rows([7, 14, 2, 1, 6, 13], [0.26, 0.23, 0.47, 0.69, 0.69, 0.63], 1.8, [0.2, 0.51, 0.4, 0.9, 0.9, 1.2],
                     [0.013, 0.027, 0.027, 0.05, 0.05, 0.06], [0.04, 0.08, 0.08, 0.20, 0.20, 0.25]),
    }},
}

FIG2A_V = tuple(float(v) for v in CAVITY_TABLES["fig2a"]["variants"])
FIG1C_SPLIT = 0.275
FIG1C_PHI = (0.24, 0.25, 0.26, 0.27, 0.28, 0.29, 0.30)


def _cavity_rows(rows, units="J", when=None):
    out = []
    for r in rows:
        row = dict(r, units=units)
        if when:
            row["when"] = when
        out.append(row)
    return out


def _base(scenario, L, N, phi, **run):
    return {
        "scenario": scenario,
        "lattice": {"L": L, "N": N, "phi_over_2pi": phi, "J_eff": 0.55},
        "drive": {"hbar_omega": 20.0, "lam_rule": "calibrated"},
        "run": run,
    }


def preset(name: str) -> dict:
    """Raw configuration mapping (same layout as a TOML config file) for a named scenario."""
    v = CAVITY_TABLES
    if name == "fig1a":
        cfg = _base(name, 4, 2, 0.25, t_final=4000.0, initial="mixed", solver="rates", k=0, n_max=2)
        cfg["cavities"] = _cavity_rows(v["fig1"]["variants"]["a"])
    elif name in ("fig1b", "fig1b-sym"):
        cfg = _base(name, 4, 2, 0.25, t_final=800.0 if name == "fig1b" else 200.0,
                    initial="lowest:5", solver="rates", k=0, n_max=2)
        cfg["cavities"] = _cavity_rows(v["fig1"]["variants"]["b"])
        cfg["lattice"]["symmetrize"] = name == "fig1b-sym"
    elif name == "fig1c":
        cfg = _base(name, 4, 2, 0.25, t_final=4000.0, initial="mixed", solver="rates", k=0, n_max=2)
        cfg["lattice"]["phi_scan"] = list(FIG1C_PHI)
        cfg["cavities"] = (_cavity_rows(v["fig1"]["variants"]["c<0.275"], when=f"phi<{FIG1C_SPLIT}")
                           + _cavity_rows(v["fig1"]["variants"]["c>=0.275"], when=f"phi>={FIG1C_SPLIT}"))
    elif name == "fig2a":
        cfg = _base(name, 6, 3, 0.25, t_final=3000.0, initial="mixed", solver="rates", k=50, n_max=2)
        cfg["lattice"]["V_scan"] = list(FIG2A_V)
        cfg["lattice"]["pot_sites"] = "center"
        cfg["cavities"] = [row for lab, rows in v["fig2a"]["variants"].items()
                           for row in _cavity_rows(rows, when=f"V={lab}")]
    elif name == "fig2b":
        cfg = _base(name, 8, 6, 0.25, t_final=3000.0, initial="mixed", solver="rates", k=50, n_max=2)
        cfg["lattice"]["V_units"] = "J_eff"
        cfg["lattice"]["V_scan"] = [0.0, 0.375, 0.5, 1.875, 2.0, 2.125, 2.375, 2.5]
        cfg["lattice"]["pot_sites"] = "center"
        cfg["cavities"] = []
        for lab, rows in v["fig2b"]["variants"].items():
            cfg["cavities"] += _cavity_rows(rows, units="J_eff", when=f"V in {lab}")
    else:
        raise PresetError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return cfg


PRESET_NAMES = ("fig1a", "fig1b", "fig1b-sym", "fig1c", "fig2a", "fig2b")
