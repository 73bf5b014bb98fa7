"""SQL dialect parameters.

Dialects are described in a small INI file (one section per dialect) so a
new engine needs configuration, not code. The bundled ``dialects.ini``
covers the embedded sqlite engine plus illustrative postgres/generic
entries; only the embedded one is executed by the test suite.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib import resources


@dataclass(frozen=True)
class SqlDialect:
    name: str
    supports_windows: bool = True
    regex_template: str = "({value} REGEXP {pattern})"
    mod_template: str = "mod({a}, {b})"
    float_cast_template: str = "CAST({x} AS REAL)"
    nulls_last: str = "NULLS LAST"

    def quote_ident(self, name: str) -> str:
        return '"' + name.replace('"', '""') + '"'

    def without_windows(self) -> "SqlDialect":
        return replace(self, supports_windows=False)


def _from_section(name: str, section) -> SqlDialect:
    return SqlDialect(
        name=name,
        supports_windows=section.getboolean("supports_windows", fallback=True),
        regex_template=section.get("regex", "({value} REGEXP {pattern})"),
        mod_template=section.get("mod", "mod({a}, {b})"),
        float_cast_template=section.get("float_cast", "CAST({x} AS REAL)"),
        nulls_last=section.get("nulls_last", "NULLS LAST"),
    )


def load_dialects(path: str | None = None) -> dict[str, SqlDialect]:
    cp = configparser.ConfigParser()
    if path is not None:
        with open(path) as fh:
            cp.read_file(fh)
    else:
        cp.read_string(resources.files("vegaplus").joinpath("dialects.ini").read_text())
    return {name: _from_section(name, cp[name]) for name in cp.sections()}


def get_dialect(name: str) -> SqlDialect:
    dialects = load_dialects()
    if name not in dialects:
        raise KeyError(f"unknown dialect {name!r}; known: {sorted(dialects)}")
    return dialects[name]


SQLITE = SqlDialect(name="sqlite")
