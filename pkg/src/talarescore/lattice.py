"""Acoustic decoding lattices: structure, text format, enumeration, generation.

A lattice is a DAG of stroke-labeled arcs carrying acoustic log-scores in the
natural-log domain.  Every path from the start node to a final node is a
candidate stroke sequence whose acoustic score is the sum of its arc scores.
Lattices are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import StrokeSequence, StrokeVocabulary, default_vocabulary, load_vocabulary
from .errors import LatticeFormatError, PathOverflowError, VocabularyError

FORMAT_HEADER = "lattice v1"


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    label: int
    w_ac: float


@dataclass(frozen=True, eq=False)
class Lattice:
    """Validated stroke lattice; node ids are dense ``0..n_nodes-1``.

    ``vocab_ref`` is the verbatim argument of the file header's ``vocab``
    directive (a path or an inline playable-symbol count) and is re-emitted
    unchanged on save so round-trips are byte-identical.
    """

    vocab: StrokeVocabulary
    n_nodes: int
    arcs: tuple[Arc, ...]
    start: int
    finals: frozenset[int]
    vocab_ref: str = ""

    def __post_init__(self) -> None:
        if not self.vocab_ref:
            object.__setattr__(self, "vocab_ref", str(self.vocab.num_playable))
        self._validate()

    def _validate(self) -> None:
        n = self.n_nodes
        if n < 1:
            raise LatticeFormatError("lattice needs at least one node")
        if not 0 <= self.start < n:
            raise LatticeFormatError(f"start node {self.start} out of range")
        if not self.finals:
            raise LatticeFormatError("lattice needs at least one final node")
        if self.start in self.finals:
            raise LatticeFormatError("start node may not be final (paths must carry strokes)")
        for f in self.finals:
            if not 0 <= f < n:
                raise LatticeFormatError(f"final node {f} out of range")
        indeg = [0] * n
        for i, arc in enumerate(self.arcs):
            if not (0 <= arc.src < n and 0 <= arc.dst < n):
                raise LatticeFormatError(f"arc {i} endpoint out of range")
            if not self.vocab.is_playable(arc.label):
                raise LatticeFormatError(f"arc {i} label {arc.label} is not a playable stroke")
            indeg[arc.dst] += 1
        if indeg[self.start] != 0:
            raise LatticeFormatError("start node has incoming arcs")
        self._check_acyclic()
        fwd = self._reachable({self.start}, forward=True)
        bwd = self._reachable(set(self.finals), forward=False)
        for v in range(n):
            if v not in fwd or v not in bwd:
                raise LatticeFormatError(f"node {v} lies on no start-to-final path")

    def _check_acyclic(self) -> None:
        indeg = [0] * self.n_nodes
        for arc in self.arcs:
            indeg[arc.dst] += 1
        queue = [v for v in range(self.n_nodes) if indeg[v] == 0]
        order = []
        while queue:
            v = queue.pop()
            order.append(v)
            for aid in self.outgoing[v]:
                d = self.arcs[aid].dst
                indeg[d] -= 1
                if indeg[d] == 0:
                    queue.append(d)
        if len(order) != self.n_nodes:
            raise LatticeFormatError("lattice contains a cycle")

    def _reachable(self, seeds: set[int], forward: bool) -> set[int]:
        adjacency = self.outgoing if forward else self.incoming
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            v = stack.pop()
            for aid in adjacency[v]:
                arc = self.arcs[aid]
                w = arc.dst if forward else arc.src
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    @cached_property
    def outgoing(self) -> tuple[tuple[int, ...], ...]:
        """Arc ids leaving each node, in arc-id order."""
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, arc in enumerate(self.arcs):
            out[arc.src].append(i)
        return tuple(tuple(ids) for ids in out)

    @cached_property
    def incoming(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, arc in enumerate(self.arcs):
            inc[arc.dst].append(i)
        return tuple(tuple(ids) for ids in inc)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = [0] * self.n_nodes
        for arc in self.arcs:
            indeg[arc.dst] += 1
        # Min-id-first Kahn keeps the order deterministic.
        heap = [v for v in range(self.n_nodes) if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for aid in self.outgoing[v]:
                d = self.arcs[aid].dst
                indeg[d] -= 1
                if indeg[d] == 0:
                    heapq.heappush(heap, d)
        return tuple(order)


def enumerate_paths(lat: Lattice, max_paths: int) -> list[tuple[StrokeSequence, float]]:
    """All start-to-final paths with their acoustic scores.

    Paths are emitted in lexicographic arc-id order; each score is the
    left-to-right sum of the path's arc scores.  Raises
    :class:`PathOverflowError` once more than ``max_paths`` paths exist.
    """
    if max_paths < 1:
        raise ValueError("max_paths must be >= 1")
    results: list[tuple[StrokeSequence, float]] = []
    labels: list[int] = []

    def visit(node: int, score: float) -> None:
        if node in lat.finals and labels:
            if len(results) >= max_paths:
                raise PathOverflowError(f"more than {max_paths} paths in lattice")
            results.append((StrokeSequence(tuple(labels)), score))
        for aid in lat.outgoing[node]:
            arc = lat.arcs[aid]
            labels.append(arc.label)
            visit(arc.dst, score + arc.w_ac)
            labels.pop()

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, lat.n_nodes + 100))
    try:
        visit(lat.start, 0.0)
    finally:
        sys.setrecursionlimit(old_limit)
    return results


def viterbi_acoustic(lat: Lattice) -> StrokeSequence:
    """Best start-to-final path by total acoustic score.

    Ties break on the lexicographically smallest arc-id sequence, which makes
    the result deterministic and keeps it consistent with the rescorer's
    tie-break when the rhythmic term vanishes.
    """
    best: dict[int, tuple[float, tuple[int, ...]]] = {lat.start: (0.0, ())}
    for v in lat.topological_order:
        if v not in best:
            continue
        score_v, seq_v = best[v]
        for aid in lat.outgoing[v]:
            arc = lat.arcs[aid]
            cand = (score_v + arc.w_ac, seq_v + (aid,))
            cur = best.get(arc.dst)
            if cur is None or _better(cand, cur):
                best[arc.dst] = cand
    winner: tuple[float, tuple[int, ...]] | None = None
    for f in sorted(lat.finals):
        cand = best.get(f)
        if cand is not None and cand[1] and (winner is None or _better(cand, winner)):
            winner = cand
    if winner is None:
        raise LatticeFormatError("no final node is reachable from the start")
    return StrokeSequence(tuple(lat.arcs[aid].label for aid in winner[1]))


def _better(cand: tuple[float, tuple[int, ...]], cur: tuple[float, tuple[int, ...]]) -> bool:
    if cand[0] != cur[0]:
        return cand[0] > cur[0]
    return cand[1] < cur[1]


@dataclass(frozen=True, kw_only=True)
class LatticeGenConfig:
    """Synthetic acoustic-lattice generation knobs.

    ``margin`` is the clean log-score separation between the true arc (0.0)
    and competitor arcs (-margin) before Gaussian perturbation by
    ``noise_sigma``; larger noise relative to the margin yields more
    acoustic-only errors.
    """

    rng_seed: int
    branching: int = 1
    noise_sigma: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    confusion: dict[str, tuple[tuple[str, float], ...]] | None = None
    margin: float = 1.0

    def __post_init__(self) -> None:
        if self.branching < 1:
            raise ValueError("branching must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        for name, p in (("p_del", self.p_del), ("p_ins", self.p_ins)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")


def generate_lattice(
    truth: StrokeSequence,
    cfg: LatticeGenConfig,
    vocab: StrokeVocabulary | None = None,
) -> Lattice:
    """Emulate a decoder's stroke lattice around a known true sequence.

    The true path is always present.  Each position carries the true arc plus
    ``branching - 1`` distinct competitor arcs; deletion branches skip a
    stroke and insertion branches route through an extra node.  Deterministic
    given ``cfg.rng_seed``.
    """
    vocab = vocab or default_vocabulary()
    if cfg.branching > vocab.num_playable:
        raise ValueError(
            f"branching {cfg.branching} exceeds vocabulary size {vocab.num_playable}"
        )
    rng = np.random.default_rng(cfg.rng_seed)
    k_total = len(truth)
    arcs: list[Arc] = []
    next_node = k_total + 1

    def noise() -> float:
        return float(rng.normal(0.0, cfg.noise_sigma))

    for k in range(1, k_total + 1):
        true_label = truth.strokes[k - 1]
        arcs.append(Arc(k - 1, k, true_label, noise()))
        for comp in _competitors(rng, true_label, cfg, vocab):
            arcs.append(Arc(k - 1, k, comp, -cfg.margin + noise()))
        if k < k_total and cfg.p_del > 0 and rng.random() < cfg.p_del:
            arcs.append(Arc(k - 1, k + 1, truth.strokes[k], -cfg.margin + noise()))
        if cfg.p_ins > 0 and rng.random() < cfg.p_ins:
            mid = next_node
            next_node += 1
            inserted = _competitors(rng, true_label, cfg, vocab, count=1)
            arcs.append(Arc(k - 1, mid, true_label, noise()))
            arcs.append(Arc(mid, k, inserted[0], -cfg.margin + noise()))
    return Lattice(
        vocab=vocab,
        n_nodes=next_node,
        arcs=tuple(arcs),
        start=0,
        finals=frozenset({k_total}),
    )


def _competitors(
    rng: np.random.Generator,
    true_label: int,
    cfg: LatticeGenConfig,
    vocab: StrokeVocabulary,
    count: int | None = None,
) -> list[int]:
    """Distinct competitor labels for one position, by confusion weight."""
    want = cfg.branching - 1 if count is None else count
    if want <= 0:
        return []
    if cfg.confusion is not None:
        entry = cfg.confusion.get(vocab.symbol_of(true_label))
    else:
        entry = None
    if entry:
        ids = [vocab.id_of(n) for n, _ in entry]
        weights = np.array([w for _, w in entry], dtype=float)
    else:
        ids = [p for p in vocab.playable_ids if p != true_label]
        weights = np.ones(len(ids))
    want = min(want, len(ids))
    probs = weights / weights.sum()
    chosen = rng.choice(len(ids), size=want, replace=False, p=probs)
    return [ids[int(i)] for i in chosen]


# ---------------------------------------------------------------------------
# Text serialization (UTF-8, line-oriented, bit-exact round-trips).


def dumps_lattice(lat: Lattice) -> str:
    lines = [FORMAT_HEADER, f"vocab {lat.vocab_ref}", f"start {lat.start}"]
    lines.append("final " + " ".join(str(f) for f in sorted(lat.finals)))
    for arc in lat.arcs:
        lines.append(f"arc {arc.src} {arc.dst} {lat.vocab.symbol_of(arc.label)} {float(arc.w_ac)!r}")
    return "".join(f"{l}\n" for l in lines)


def save_lattice(lat: Lattice, path: str | Path) -> None:
    Path(path).write_text(dumps_lattice(lat), encoding="utf-8")


def load_lattice(path: str | Path, vocab: StrokeVocabulary | None = None) -> Lattice:
    """Parse a lattice file.

    Symbol resolution order: the explicit ``vocab`` argument, then a vocab
    path in the header (relative to the lattice file), then a vocabulary
    reconstructed from the arc symbols themselves when the header carries an
    inline count.
    """
    path = Path(path)
    return loads_lattice(path.read_text(encoding="utf-8"), vocab=vocab, base_dir=path.parent)


def loads_lattice(
    text: str,
    vocab: StrokeVocabulary | None = None,
    base_dir: Path | None = None,
) -> Lattice:
    lines = [l.strip() for l in text.splitlines()]
    lines = [l for l in lines if l and not l.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise LatticeFormatError(f"expected header {FORMAT_HEADER!r}")
    vocab_ref = ""
    start: int | None = None
    finals: set[int] = set()
    raw_arcs: list[tuple[int, int, str, float]] = []
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "vocab":
            if len(parts) != 2:
                raise LatticeFormatError(f"bad vocab line: {line!r}")
            vocab_ref = parts[1]
        elif parts[0] == "start":
            start = int(parts[1])
        elif parts[0] == "final":
            finals.update(int(p) for p in parts[1:])
        elif parts[0] == "arc":
            if len(parts) != 5:
                raise LatticeFormatError(f"bad arc line: {line!r}")
            raw_arcs.append((int(parts[1]), int(parts[2]), parts[3], float(parts[4])))
        else:
            raise LatticeFormatError(f"unknown directive: {parts[0]!r}")
    if start is None or not finals:
        raise LatticeFormatError("missing start or final directive")

    if vocab is None:
        vocab = _resolve_vocab(vocab_ref, raw_arcs, base_dir)
    try:
        arcs = tuple(Arc(s, d, vocab.id_of(sym), w) for s, d, sym, w in raw_arcs)
    except VocabularyError as exc:
        raise LatticeFormatError(str(exc)) from exc
    n_nodes = 1 + max(
        [start, *finals, *(a.src for a in arcs), *(a.dst for a in arcs)]
    )
    return Lattice(
        vocab=vocab,
        n_nodes=n_nodes,
        arcs=arcs,
        start=start,
        finals=frozenset(finals),
        vocab_ref=vocab_ref or str(vocab.num_playable),
    )


def _resolve_vocab(
    vocab_ref: str,
    raw_arcs: list[tuple[int, int, str, float]],
    base_dir: Path | None,
) -> StrokeVocabulary:
    if not vocab_ref:
        raise LatticeFormatError("no vocab directive and no vocabulary supplied")
    if vocab_ref.isdigit():
        declared = int(vocab_ref)
        seen: list[str] = []
        for _, _, sym, _ in raw_arcs:
            if sym not in seen:
                seen.append(sym)
        if len(seen) > declared:
            raise LatticeFormatError(
                f"vocab count {declared} smaller than {len(seen)} distinct arc symbols"
            )
        return StrokeVocabulary.of(seen)
    vocab_path = Path(vocab_ref)
    if base_dir is not None and not vocab_path.is_absolute():
        vocab_path = base_dir / vocab_path
    return load_vocabulary(vocab_path)
