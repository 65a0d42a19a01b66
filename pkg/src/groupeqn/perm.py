"""Permutations on 0-based points and the cycle-notation text format."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputError

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True)
class Permutation:
    """Bijection on [0, degree), stored as a tuple of images."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.images)
        if sorted(self.images) != list(range(n)):
            raise InputError(f"not a permutation of 0..{n - 1}: {self.images}")

    @property
    def degree(self) -> int:
        return len(self.images)

    @staticmethod
    def identity(degree: int) -> "Permutation":
        return Permutation(tuple(range(degree)))

    def __call__(self, point: int) -> int:
        return self.images[point]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition: apply self first, then other."""
        if other.degree != self.degree:
            raise InputError("degree mismatch in permutation product")
        return Permutation(tuple(other.images[x] for x in self.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.degree
        for x, y in enumerate(self.images):
            inv[y] = x
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(x == y for x, y in enumerate(self.images))

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, each starting from its least point."""
        seen = [False] * self.degree
        out = []
        for start in range(self.degree):
            if seen[start] or self.images[start] == start:
                seen[start] = True
                continue
            cyc = [start]
            seen[start] = True
            x = self.images[start]
            while x != start:
                cyc.append(x)
                seen[x] = True
                x = self.images[x]
            out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        cycs = self.cycles()
        if not cycs:
            return "()"
        return "".join("(" + " ".join(str(p) for p in c) + ")" for c in cycs)


def parse_permutation(text: str, degree: int) -> Permutation:
    """Parse cycle notation like ``(0 1 2)(3 4)``; ``()`` is the identity."""
    text = text.strip()
    stripped = _CYCLE_RE.sub("", text).strip()
    if stripped:
        raise InputError(f"unparsable permutation text: {text!r}")
    images = list(range(degree))
    for body in _CYCLE_RE.findall(text):
        points = [int(tok) for tok in body.replace(",", " ").split()]
        if not points:
            continue
        if len(set(points)) != len(points):
            raise InputError(f"repeated point in cycle: {body!r}")
        if any(p < 0 or p >= degree for p in points):
            raise InputError(f"cycle point out of range 0..{degree - 1}: {body!r}")
        for i, p in enumerate(points):
            images[p] = points[(i + 1) % len(points)]
    return Permutation(tuple(images))


def parse_generator_file(text: str) -> list[Permutation]:
    """Parse the group spec format: ``degree N`` then one permutation per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError("empty group file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "degree":
        raise InputError(f"expected 'degree N' header, got {lines[0]!r}")
    degree = int(head[1])
    if degree <= 0:
        raise InputError("degree must be positive")
    gens = [parse_permutation(ln, degree) for ln in lines[1:]]
    if not gens:
        raise InputError("group file lists no generators")
    return gens


def format_generator_file(gens: list[Permutation], comment: str | None = None) -> str:
    if not gens:
        raise InputError("no generators to format")
    degree = gens[0].degree
    out = []
    if comment:
        for line in comment.splitlines():
            out.append(f"# {line}")
    out.append(f"degree {degree}")
    out.extend(str(g) for g in gens)
    return "\n".join(out) + "\n"
