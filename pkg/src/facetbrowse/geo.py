"""Geographic hierarchy: region > country > city trees for browse views.

A GeoTree maps place-name aliases to nodes so record values resolve to a
node, its country, and its region. Selecting a node means selecting its
whole subtree. Trees are loaded from an indented outline file; no shapes or
boundaries are involved, only the containment hierarchy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import FacetBrowseError

__all__ = ["GeoLevel", "GeoNode", "GeoTree", "MalformedTree", "load_geo_tree", "builtin_geo_tree"]


class MalformedTree(FacetBrowseError):
    code = "MalformedTree"


class GeoLevel(Enum):
    REGION = "region"
    COUNTRY = "country"
    CITY = "city"


_LEVELS = (GeoLevel.REGION, GeoLevel.COUNTRY, GeoLevel.CITY)
_WS = re.compile(r"\s+")


def _normalize(name: str) -> str:
    return _WS.sub(" ", name.strip()).casefold()


@dataclass
class GeoNode:
    """One node of the hierarchy; ``name`` is also its selection key."""

    name: str
    level: GeoLevel
    parent: "GeoNode | None" = None
    aliases: tuple[str, ...] = ()
    children: "list[GeoNode]" = field(default_factory=list)

    def ancestors(self) -> "list[GeoNode]":
        out = []
        node = self.parent
        while node is not None:
            out.append(node)
            node = node.parent
        return out

    def subtree(self) -> "list[GeoNode]":
        out = [self]
        for child in self.children:
            out.extend(child.subtree())
        return out


class GeoTree:
    """A validated forest of regions with alias lookup.

    Node names and aliases resolve case-insensitively after whitespace
    normalization (same rule as the gazetteer). Names must be unique across
    the tree so a selection key identifies one node.
    """

    def __init__(self, roots: "list[GeoNode]"):
        self.roots = roots
        self._by_key: dict[str, GeoNode] = {}
        self._by_name: dict[str, GeoNode] = {}
        for root in roots:
            if root.level is not GeoLevel.REGION:
                raise MalformedTree(f"top-level node {root.name!r} must be a region")
            for node in root.subtree():
                self._register(node)
                if node.parent is not None:
                    expected = _LEVELS[_LEVELS.index(node.parent.level) + 1]
                    if node.level is not expected:
                        raise MalformedTree(
                            f"{node.level.value} {node.name!r} cannot be a child "
                            f"of {node.parent.level.value} {node.parent.name!r}"
                        )

    def _register(self, node: GeoNode) -> None:
        name_key = _normalize(node.name)
        if name_key in self._by_name:
            raise MalformedTree(f"duplicate node name {node.name!r}")
        self._by_name[name_key] = node
        for alias in (node.name, *node.aliases):
            key = _normalize(alias)
            if not key:
                continue
            if key in self._by_key and self._by_key[key] is not node:
                raise MalformedTree(
                    f"alias {alias!r} maps to both {self._by_key[key].name!r} "
                    f"and {node.name!r}"
                )
            self._by_key[key] = node

    def resolve(self, value: str) -> GeoNode | None:
        """Node whose name or alias matches the value, if any."""
        return self._by_key.get(_normalize(value))

    def node(self, name: str) -> GeoNode | None:
        """Node by (normalized) name; aliases are not consulted."""
        return self._by_name.get(_normalize(name))

    def all_nodes(self) -> "list[GeoNode]":
        out = []
        for root in self.roots:
            out.extend(root.subtree())
        return out


def load_geo_tree(path: Path) -> GeoTree:
    """Parse an indented outline into a GeoTree.

    Two spaces of indentation per level; the first ``|``-separated token on
    a line is the node name, the rest are aliases. Blank lines and ``#``
    comments are skipped.
    """
    roots: list[GeoNode] = []
    stack: list[GeoNode] = []
    for line_no, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2 != 0:
            raise MalformedTree(f"line {line_no}: odd indentation")
        depth = indent // 2
        if depth >= len(_LEVELS):
            raise MalformedTree(
                f"line {line_no}: nesting deeper than region > country > city"
            )
        if depth > len(stack):
            raise MalformedTree(f"line {line_no}: indentation skips a level")
        parts = [p.strip() for p in raw.strip().split("|")]
        name, aliases = parts[0], tuple(p for p in parts[1:] if p)
        if not name:
            raise MalformedTree(f"line {line_no}: empty node name")
        node = GeoNode(
            name=name,
            level=_LEVELS[depth],
            parent=stack[depth - 1] if depth else None,
            aliases=aliases,
        )
        if depth == 0:
            roots.append(node)
        else:
            stack[depth - 1].children.append(node)
        del stack[depth:]
        stack.append(node)
    return GeoTree(roots)


def builtin_geo_tree() -> GeoTree:
    """The starter hierarchy bundled with the package."""
    ref = resources.files("facetbrowse").joinpath("data/geo_tree.txt")
    with resources.as_file(ref) as path:
        return load_geo_tree(path)
