"""Set partitions of {1..k}: canonical representation and lazy enumeration
in restricted-growth-string order.
"""

from dataclasses import dataclass
from typing import Iterator, Sequence

__all__ = ["SetPartition", "enumerate_partitions", "partition_of", "bell_number", "ENUMERATION_CAP"]

ENUMERATION_CAP = 12


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1..k} into nonempty blocks, each block sorted and the
    blocks ordered by least element."""

    k: int
    blocks: tuple

    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("ground set must be nonempty")
        seen = set()
        prev_min = 0
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            if list(block) != sorted(block):
                raise ValueError("block not sorted")
            if block[0] <= prev_min:
                raise ValueError("blocks not in order of least element")
            prev_min = block[0]
            for i in block:
                if i in seen:
                    raise ValueError("blocks not disjoint")
                seen.add(i)
        if seen != set(range(1, self.k + 1)):
            raise ValueError("blocks do not cover {1..k}")


def bell_number(k: int) -> int:
    """Bell number via the Bell triangle."""
    if k < 0:
        raise ValueError("k must be non-negative")
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def _blocks_from_rgs(rgs) -> SetPartition:
    k = len(rgs)
    nblocks = max(rgs) + 1
    blocks = [[] for _ in range(nblocks)]
    for i, label in enumerate(rgs):
        blocks[label].append(i + 1)
    return SetPartition(k=k, blocks=tuple(tuple(b) for b in blocks))


def enumerate_partitions(k: int, allow_large: bool = False) -> Iterator[SetPartition]:
    """Yield every partition of {1..k} exactly once, in lexicographic order of
    the restricted growth string.  Refuses k beyond the enumeration cap
    unless allow_large is set, since the count is Bell(k).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > ENUMERATION_CAP and not allow_large:
        raise ValueError(
            f"k={k} exceeds the enumeration cap {ENUMERATION_CAP} "
            f"(Bell({k}) = {bell_number(k)} partitions); pass allow_large=True to override"
        )
    a = [0] * k          # restricted growth string
    b = [1] * k          # b[i] = 1 + max(a[:i]) for i >= 1
    while True:
        yield _blocks_from_rgs(a)
        # advance to the next restricted growth string
        j = k - 1
        while j > 0 and a[j] == b[j]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        for i in range(j + 1, k):
            a[i] = 0
            b[i] = max(b[j], a[j] + 1) if i == j + 1 else max(b[i - 1], a[i - 1] + 1)


def partition_of(labels: Sequence) -> SetPartition:
    """Partition of {1..n} generated by equality of the given labels."""
    if len(labels) == 0:
        raise ValueError("labels must be nonempty")
    slots = {}
    blocks = []
    for i, lab in enumerate(labels):
        if lab not in slots:
            slots[lab] = len(blocks)
            blocks.append([])
        blocks[slots[lab]].append(i + 1)
    return SetPartition(k=len(labels), blocks=tuple(tuple(b) for b in blocks))
