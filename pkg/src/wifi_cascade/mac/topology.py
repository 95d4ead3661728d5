"""Interference graphs of hidden-node pair chains."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Topology:
    """Transmitter ``A_i`` sends to receiver ``B_i``.

    ``interferers[j]`` lists the hidden transmitters whose airtime destroys
    receptions at ``B_j``. ``carrier_sense[i]`` lists transmitters that ``A_i``
    hears directly; in the chain geometry nobody hears anybody.
    """

    kind: str
    pairs: tuple[tuple[str, str], ...]
    interferers: tuple[tuple[int, ...], ...]
    carrier_sense: tuple[tuple[int, ...], ...]

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """``(interfering transmitter, victim receiver)`` pairs."""
        return [(k, j) for j, ks in enumerate(self.interferers) for k in ks]

    def victims(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.pairs]
        for k, j in self.edges:
            out[k].append(j)
        return tuple(tuple(v) for v in out)

    def deferral_sets(self, rts_cts: bool) -> tuple[tuple[int, ...], ...]:
        """Transmitters each node defers to.

        With the idealized RTS/CTS switch the hidden neighbours on either side
        of every interference edge defer to each other as if they could hear.
        """
        sets = [set(cs) for cs in self.carrier_sense]
        if rts_cts:
            for k, j in self.edges:
                sets[j].add(k)
                sets[k].add(j)
        return tuple(tuple(sorted(s - {i})) for i, s in enumerate(sets))


def build_topology(kind: str, n_pairs: int) -> Topology:
    if n_pairs < 2:
        raise ValueError("a chain needs at least two pairs")
    if kind not in ("linear", "ring"):
        raise ValueError(f"unknown topology kind {kind!r}")
    pairs = tuple((f"A{i}", f"B{i}") for i in range(n_pairs))
    interferers = [() if j == 0 else (j - 1,) for j in range(n_pairs)]
    if kind == "ring":
        interferers[0] = (n_pairs - 1,)
    return Topology(kind, pairs, tuple(interferers), tuple(() for _ in range(n_pairs)))
