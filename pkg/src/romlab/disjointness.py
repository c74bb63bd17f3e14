"""Promise set-disjointness instances: every element of ``[N]`` lies in 0,
1 or all ``t`` of the sets."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from romlab.errors import InfeasiblePromise
from romlab.params import Params
from romlab.seeding import rng_for


class Kind(str, enum.Enum):
    YES = "YES"
    NO = "NO"

    @classmethod
    def parse(cls, value: "str | Kind") -> "Kind":
        if isinstance(value, Kind):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True)
class DisjInstance:
    N: int
    t: int
    w: int
    kind: Kind
    sets: tuple[np.ndarray, ...]
    witness: int | None = None

    def matrix(self) -> np.ndarray:
        """Sets as a ``t x w`` array; row ``i - 1`` is ``S_i`` ascending."""
        return np.vstack(self.sets)

    def to_dict(self) -> dict:
        out: dict = {"N": self.N, "t": self.t, "w": self.w, "kind": self.kind.value}
        if self.witness is not None:
            out["witness"] = self.witness
        out["sets"] = [sorted(int(x) for x in s) for s in self.sets]
        return out

    def to_json(self) -> str:
        """Canonical encoding: fixed key order, sets by index, elements ascending."""
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "DisjInstance":
        return cls(
            N=int(data["N"]), t=int(data["t"]), w=int(data["w"]),
            kind=Kind.parse(data["kind"]),
            sets=tuple(np.asarray(sorted(s), dtype=np.int64) for s in data["sets"]),
            witness=data.get("witness"),
        )


def gen_instance(N: int, t: int, w: int, kind: "Kind | str", seed: int) -> DisjInstance:
    """A uniformly drawn promise instance of the requested kind.

    NO: ``t*w`` distinct elements split into ``t`` sets. YES: one witness
    shared by all sets plus ``t*(w-1)`` distinct private elements.
    """
    kind = Kind.parse(kind)
    if w < 1 or t < 2:
        raise InfeasiblePromise(f"need w >= 1 and t >= 2, got w = {w}, t = {t}")
    need = t * w if kind is Kind.NO else t * (w - 1) + 1
    if need > N:
        if kind is Kind.NO:
            raise InfeasiblePromise(f"NO instance needs t*w = {need} <= N = {N}")
        raise InfeasiblePromise(f"YES instance needs t*(w-1)+1 = {need} <= N = {N}")
    rng = rng_for(seed, "instance", 0 if kind is Kind.NO else 1)
    drawn = rng.choice(N, size=need, replace=False).astype(np.int64) + 1
    if kind is Kind.NO:
        rows = np.sort(drawn.reshape(t, w), axis=1)
        witness = None
    else:
        witness = int(drawn[0])
        private = drawn[1:].reshape(t, w - 1)
        rows = np.sort(np.hstack([private, np.full((t, 1), witness)]), axis=1)
    return DisjInstance(N=N, t=t, w=w, kind=kind, sets=tuple(rows), witness=witness)


def gen_instance_for(params: Params, kind: "Kind | str", seed: int) -> DisjInstance:
    return gen_instance(params.N, params.t, params.w, kind, seed)


def validate_promise(instance: DisjInstance) -> list[str]:
    """Every promise violation found; an empty list means the instance is valid."""
    problems: list[str] = []
    t = instance.t
    if len(instance.sets) != t:
        problems.append(f"expected {t} sets, found {len(instance.sets)}")
    occurrences: Counter = Counter()
    for i, s in enumerate(instance.sets, start=1):
        values = [int(x) for x in s]
        if len(set(values)) != len(values):
            problems.append(f"S_{i} has repeated elements")
        if len(set(values)) != instance.w:
            problems.append(f"|S_{i}| = {len(set(values))}, expected {instance.w}")
        outside = [x for x in values if not 1 <= x <= instance.N]
        if outside:
            problems.append(f"S_{i} has elements outside [1, {instance.N}]: {outside[:5]}")
        occurrences.update(set(values))
    for x, c in sorted(occurrences.items()):
        if 1 < c < t:
            problems.append(f"element {x} occurs in {c} sets (0 < {c} < t = {t})")
    common = sorted(x for x, c in occurrences.items() if c == t)
    if instance.kind is Kind.YES:
        if not common:
            problems.append("kind is YES but no element lies in every set (missing witness)")
        elif len(common) > 1:
            problems.append(f"{len(common)} elements lie in every set; expected exactly one")
        if instance.witness is None:
            problems.append("kind is YES but no witness recorded")
        elif common and instance.witness not in common:
            problems.append(f"recorded witness {instance.witness} is not in every set")
    else:
        if common:
            problems.append(f"kind is NO but elements {common[:5]} lie in every set")
        if instance.witness is not None:
            problems.append("kind is NO but a witness is recorded")
    return problems


def solve_exact(sets: "DisjInstance | Sequence[Sequence[int]]") -> Kind:
    if isinstance(sets, DisjInstance):
        sets = sets.sets
    common = set(int(x) for x in sets[0])
    for s in sets[1:]:
        common.intersection_update(int(x) for x in s)
        if not common:
            return Kind.NO
    return Kind.YES if common else Kind.NO
