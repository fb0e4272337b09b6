"""Labeled and unlabeled partitions of a finite sample.

Blocks are nonempty subsets of {1, ..., n} ordered by their minimal element.
A labeled partition additionally attaches a torus site to every block. Both
kinds are immutable values: all mutating operations return new partitions.

Elements are 1-based. Block indices in the API are 0-based.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Tuple

Site = Tuple[int, int]

#: Hard cap on the sample size. The simulator packs block memberships into
#: 64-bit masks, and the reference experiments use n = 9.
MAX_SAMPLE_SIZE = 64


def _normalize_blocks(blocks: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    out = []
    for b in blocks:
        elems = tuple(sorted(set(int(e) for e in b)))
        if not elems:
            raise ValueError("empty blocks are not representable")
        out.append(elems)
    out.sort(key=lambda b: b[0])
    return tuple(out)


def _check_cover(blocks: tuple[tuple[int, ...], ...]) -> int:
    seen: set[int] = set()
    total = 0
    for b in blocks:
        for e in b:
            if e in seen:
                raise ValueError(f"element {e} appears in more than one block")
            seen.add(e)
        total += len(b)
    n = max(seen) if seen else 0
    if n > MAX_SAMPLE_SIZE:
        raise ValueError(f"sample size {n} exceeds limit {MAX_SAMPLE_SIZE}")
    if seen != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - seen)
        raise ValueError(f"blocks must partition 1..{n}; missing {missing}")
    return n


class UnlabeledPartition:
    """A partition of {1, ..., n} with blocks ordered by minimal element."""

    __slots__ = ("_blocks", "_n", "_block_of")

    def __init__(self, blocks: Iterable[Iterable[int]]):
        self._blocks = _normalize_blocks(blocks)
        self._n = _check_cover(self._blocks)
        self._block_of = {e: i for i, b in enumerate(self._blocks) for e in b}

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return self._blocks

    @property
    def n(self) -> int:
        return self._n

    @property
    def n_blocks(self) -> int:
        return len(self._blocks)

    def block_containing(self, element: int) -> int:
        """Index of the block holding ``element``."""
        return self._block_of[element]

    def __eq__(self, other) -> bool:
        return isinstance(other, UnlabeledPartition) and self._blocks == other._blocks

    def __hash__(self) -> int:
        return hash(self._blocks)

    def __repr__(self) -> str:
        body = "|".join("{" + ",".join(map(str, b)) + "}" for b in self._blocks)
        return f"UnlabeledPartition({body})"


class LabeledPartition:
    """A partition of {1, ..., n} whose blocks carry torus-site labels."""

    __slots__ = ("_blocks", "_labels", "_n", "_block_of")

    def __init__(self, blocks: Iterable[Iterable[int]], labels: Sequence[Site]):
        raw = [tuple(sorted(set(int(e) for e in b))) for b in blocks]
        labels = [tuple(int(c) for c in lab) for lab in labels]
        if len(raw) != len(labels):
            raise ValueError(
                f"{len(raw)} blocks but {len(labels)} labels"
            )
        for b in raw:
            if not b:
                raise ValueError("empty blocks are not representable")
        for lab in labels:
            if len(lab) != 2:
                raise ValueError(f"labels must be (x, y) pairs, got {lab!r}")
        order = sorted(range(len(raw)), key=lambda i: raw[i][0])
        self._blocks = tuple(raw[i] for i in order)
        self._labels = tuple(labels[i] for i in order)
        self._n = _check_cover(self._blocks)
        self._block_of = {e: i for i, b in enumerate(self._blocks) for e in b}

    # -- construction -------------------------------------------------

    @classmethod
    def singletons(cls, n: int, labels: Sequence[Site]) -> "LabeledPartition":
        """All-singleton start state: block i = {i} at labels[i-1]."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if len(labels) != n:
            raise ValueError(f"need {n} labels, got {len(labels)}")
        return cls([(i,) for i in range(1, n + 1)], labels)

    # -- accessors ----------------------------------------------------

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return self._blocks

    @property
    def labels(self) -> tuple[Site, ...]:
        return self._labels

    @property
    def n(self) -> int:
        return self._n

    @property
    def n_blocks(self) -> int:
        return len(self._blocks)

    def block_containing(self, element: int) -> int:
        return self._block_of[element]

    def label_of(self, element: int) -> Site:
        """Site label of the block holding ``element``."""
        return self._labels[self._block_of[element]]

    def blocks_at(self, site: Site) -> tuple[int, ...]:
        """Indices of blocks labeled ``site``."""
        site = (int(site[0]), int(site[1]))
        return tuple(i for i, lab in enumerate(self._labels) if lab == site)

    # -- operations ---------------------------------------------------

    def merge(
        self,
        block_indices: Iterable[int],
        new_label: Site | None = None,
        check_labels: bool = True,
    ) -> "LabeledPartition":
        """Merge the given blocks into one block labeled ``new_label``.

        Coalescence semantics require all merged blocks to share one label
        (which then is the new label); pass ``check_labels=False`` with an
        explicit ``new_label`` for test harness use.
        """
        idx = sorted(set(int(i) for i in block_indices))
        if len(idx) < 2:
            raise ValueError("merge needs at least 2 distinct block indices")
        if idx[0] < 0 or idx[-1] >= len(self._blocks):
            raise ValueError(f"block index out of range: {idx}")
        labels = {self._labels[i] for i in idx}
        if check_labels:
            if len(labels) != 1:
                raise ValueError(f"cannot coalesce blocks at different sites: {sorted(labels)}")
            (shared,) = labels
            if new_label is None:
                new_label = shared
            elif tuple(new_label) != shared:
                raise ValueError(f"new_label {new_label} differs from shared label {shared}")
        elif new_label is None:
            raise ValueError("relaxed merge requires an explicit new_label")
        merged = tuple(sorted(e for i in idx for e in self._blocks[i]))
        keep = [i for i in range(len(self._blocks)) if i not in idx]
        blocks = [self._blocks[i] for i in keep] + [merged]
        labels_out = [self._labels[i] for i in keep] + [tuple(new_label)]
        return LabeledPartition(blocks, labels_out)

    def restrict(self, m: int) -> "LabeledPartition":
        """The labeled partition induced on {1, ..., m}."""
        if not 1 <= m <= self._n:
            raise ValueError(f"m must be in 1..{self._n}, got {m}")
        blocks, labels = [], []
        for b, lab in zip(self._blocks, self._labels):
            cut = tuple(e for e in b if e <= m)
            if cut:
                blocks.append(cut)
                labels.append(lab)
        return LabeledPartition(blocks, labels)

    def unlabeled(self) -> UnlabeledPartition:
        """Drop the labels."""
        return UnlabeledPartition(self._blocks)

    # -- text form ----------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form, e.g. ``{1,3}@(0,0)|{2}@(5,-5)``."""
        return "|".join(
            "{" + ",".join(map(str, b)) + "}@(" + f"{lab[0]},{lab[1]}" + ")"
            for b, lab in zip(self._blocks, self._labels)
        )

    @classmethod
    def from_text(cls, text: str) -> "LabeledPartition":
        blocks, labels = [], []
        for part in text.strip().split("|"):
            body, _, lab = part.partition("@")
            if not (body.startswith("{") and body.endswith("}") and lab.startswith("(") and lab.endswith(")")):
                raise ValueError(f"malformed block {part!r}")
            blocks.append(tuple(int(e) for e in body[1:-1].split(",")))
            x, y = lab[1:-1].split(",")
            labels.append((int(x), int(y)))
        return cls(blocks, labels)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabeledPartition)
            and self._blocks == other._blocks
            and self._labels == other._labels
        )

    def __hash__(self) -> int:
        return hash((self._blocks, self._labels))

    def __repr__(self) -> str:
        return f"LabeledPartition({self.to_text()})"


def partition_metric(p1: LabeledPartition, p2: LabeledPartition) -> float:
    """Distance sup_m 2^-m 1{p1|_m != p2|_m}; zero iff the partitions agree.

    Defined for labeled partitions of the same sample; labels count towards
    disagreement.
    """
    if p1.n != p2.n:
        raise ValueError(f"partitions of different samples: n={p1.n} vs n={p2.n}")
    for m in range(1, p1.n + 1):
        if p1.restrict(m) != p2.restrict(m):
            return 2.0 ** (-m)
    return 0.0


def unlabeled_metric(p1: UnlabeledPartition, p2: UnlabeledPartition) -> float:
    """The same metric on unlabeled partitions."""
    if p1.n != p2.n:
        raise ValueError(f"partitions of different samples: n={p1.n} vs n={p2.n}")
    for m in range(1, p1.n + 1):
        r1 = [tuple(e for e in b if e <= m) for b in p1.blocks]
        r2 = [tuple(e for e in b if e <= m) for b in p2.blocks]
        if [b for b in r1 if b] != [b for b in r2 if b]:
            return 2.0 ** (-m)
    return 0.0


def in_distance_class(p: LabeledPartition, torus, a: float, b: float) -> bool:
    """True iff all pairwise block-label distances lie in [a, b].

    Vacuously true for partitions with at most one block.
    """
    if not 0 <= a <= b:
        raise ValueError(f"need 0 <= a <= b, got [{a}, {b}]")
    labs = p.labels
    for i in range(len(labs)):
        for j in range(i + 1, len(labs)):
            d = torus.distance(labs[i], labs[j])
            if not (a <= d <= b):
                return False
    return True
