"""Seeded attribute generators used when a thimac creates a new thing.

Two kinds exist: ``digits(n)`` yields an n-digit positive integer string,
``range(lo, hi)`` a zero-padded integer string in ``[lo, hi]`` (width is
the digit count of ``hi``, at least 2).
"""

from __future__ import annotations

import random
from typing import Iterable, Mapping

from tmkit.diagnostics import TMError
from tmkit.model import GeneratorDecl, check_generator


class GeneratorError(TMError):
    code = "E_GEN_SPEC"


def range_width(hi: int) -> int:
    return max(2, len(str(hi)))


def draw(gen: GeneratorDecl, rng: random.Random) -> str:
    problem = check_generator(gen)
    if problem:
        raise GeneratorError(f"{gen.attr}: {problem}")
    if gen.kind == "digits":
        (n,) = gen.args
        return str(rng.randint(1, 9)) + "".join(str(rng.randint(0, 9)) for _ in range(n - 1))
    lo, hi = gen.args
    return f"{rng.randint(lo, hi):0{range_width(hi)}d}"


def _as_decls(spec) -> list[GeneratorDecl]:
    if isinstance(spec, GeneratorDecl):
        return [spec]
    if isinstance(spec, Mapping):
        return [GeneratorDecl(attr, kind, tuple(args)) for attr, (kind, args) in spec.items()]
    return list(spec)


def generate_instance(spec: Iterable[GeneratorDecl] | Mapping | GeneratorDecl, seed: int | str) -> dict[str, str]:
    """Draw one value per generator, in declaration order.

    The result depends only on ``(spec, seed)``.
    """
    rng = random.Random(seed)
    return {gen.attr: draw(gen, rng) for gen in _as_decls(spec)}
