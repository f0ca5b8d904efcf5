"""History-preserving lattice rescoring via state expansion and beam search.

The acoustic lattice merges paths regardless of stroke history, which makes
history-dependent rhythmic scoring ill-defined at merged nodes.  Rescoring
therefore expands each (lattice node, stroke history, Dirichlet snapshot)
triple into its own state: a best-first traversal pops the top-scoring state,
forms the combined rhythmic distribution for its history, rescores every
outgoing arc with the acoustic score plus the scaled log rhythmic probability,
and pushes the successor states.  The queue is pruned to a score band and a
capacity after every expansion batch; the answer is the history of the best
terminal state in the expanded lattice.

Because the dynamic model evolves along each path, the expanded lattice is a
tree rooted at the start state.  Pruning only stops further expansion: states
already added to the expanded lattice keep competing in the final selection.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SENTINEL_ID, StrokeSequence, StrokeVocabulary
from .dynamic_model import DECAY_SCOPES, DirichletState, predict, update
from .errors import RescoreError, VocabularyMismatchError
from .fusion import acoustic_confidence, combine, jsd, lambda_k, parse_lambda_mode
from .lattice import Lattice
from .model import RhythmModel
from .static_prior import NextStrokePrior

BEAM_SCOPES = ("global", "frontier")


@dataclass(frozen=True, kw_only=True)
class RescoreConfig:
    """Decode-time hyperparameters.

    ``w_dyn`` documents the effective memory scale of the dynamic model that
    accompanies ``rho``; next-stroke prediction itself conditions only on the
    previous stroke through the pseudo-count matrix, so ``w_dyn`` does not
    enter the math.  ``delta_beam`` is a natural-log score band.  Histories
    are stored in full: the n-gram context, the tala window, and the final
    transcription all read from them.
    """

    rho: float = 0.03
    beta: float = 0.5
    w_dyn: int = 32
    w_tau: int = 16
    k_beam: int = 150
    delta_beam: float = 10.0
    lambda_mode: str = "adaptive"
    eps_jsd: float = 1e-8
    decay_scope: str = "global"
    beam_scope: str = "global"
    collect_traces: bool = False

    def __post_init__(self) -> None:
        if self.k_beam < 1:
            raise ValueError("k_beam must be >= 1")
        if self.delta_beam < 0:
            raise ValueError("delta_beam must be non-negative")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.w_tau < 1:
            raise ValueError("w_tau must be >= 1")
        if self.decay_scope not in DECAY_SCOPES:
            raise ValueError(f"decay_scope must be one of {DECAY_SCOPES}")
        if self.beam_scope not in BEAM_SCOPES:
            raise ValueError(f"beam_scope must be one of {BEAM_SCOPES}")
        parse_lambda_mode(self.lambda_mode)


@dataclass(frozen=True, eq=False)
class ExpandedState:
    """One (lattice node, history, Dirichlet snapshot) decoding state.

    ``history`` always begins with the start sentinel; ``acc_score`` is the
    sum of rescored arc weights along the backpointer chain.
    """

    id: int
    node: int
    history: tuple[int, ...]
    dirichlet: DirichletState
    acc_score: float
    parent: int | None
    arc_id: int | None


@dataclass(frozen=True)
class ExpandedArc:
    src: int
    dst: int
    label: int
    weight: float
    lattice_arc: int


@dataclass(eq=False)
class ExpandedLattice:
    """Tree of expanded states; terminals sit on final acoustic nodes."""

    vocab: StrokeVocabulary
    states: list[ExpandedState] = field(default_factory=list)
    arcs: list[ExpandedArc] = field(default_factory=list)
    terminals: list[int] = field(default_factory=list)

    @property
    def start_state(self) -> int:
        return 0

    def arc_chain(self, state_id: int) -> tuple[int, ...]:
        """Original lattice arc ids from the root to ``state_id``."""
        chain: list[int] = []
        st = self.states[state_id]
        while st.arc_id is not None:
            chain.append(st.arc_id)
            st = self.states[st.parent]
        chain.reverse()
        return tuple(chain)


@dataclass(frozen=True)
class StepTrace:
    """Per-expansion instrumentation for one popped state."""

    state_id: int
    node: int
    depth: int
    confidence: float
    divergence: float
    lam: float
    p_static: np.ndarray
    p_dyn: np.ndarray
    p_comb: np.ndarray


@dataclass(eq=False)
class RescoreDiagnostics:
    pops: int = 0
    pushes: int = 0
    pruned_band: int = 0
    pruned_capacity: int = 0
    max_queue_size: int = 0
    traces: list[StepTrace] = field(default_factory=list)


def rescore(
    lat: Lattice,
    model: RhythmModel,
    cfg: RescoreConfig | None = None,
    static_prior: "NextStrokePrior | None" = None,
) -> tuple[StrokeSequence, ExpandedLattice, RescoreDiagnostics]:
    """Rhythmically rescore a lattice; returns the best path, the expanded
    lattice, and diagnostics.

    Every lattice arc symbol must exist in the model vocabulary; the returned
    sequence uses model stroke ids.  ``static_prior`` swaps in a replacement
    next-stroke model (histories are passed as playable model ids); by default
    the model's own marginalized n-gram prior is used.
    """
    cfg = cfg or RescoreConfig()
    label_map = _map_labels(lat, model.vocab)
    static = static_prior if static_prior is not None else model.static_prior(w_tau=cfg.w_tau)
    fixed_lam = parse_lambda_mode(cfg.lambda_mode)
    beta = cfg.beta
    collect = cfg.collect_traces
    prune_active = math.isfinite(cfg.delta_beam) or cfg.k_beam < (1 << 60)

    exp = ExpandedLattice(vocab=model.vocab)
    diag = RescoreDiagnostics()
    root = ExpandedState(
        id=0,
        node=lat.start,
        history=(SENTINEL_ID,),
        dirichlet=model.initial_dirichlet(cfg.rho),
        acc_score=0.0,
        parent=None,
        arc_id=None,
    )
    exp.states.append(root)

    node_confidence: dict[int, float] = {}
    queue: list[tuple[float, int, int]] = [(-0.0, 0, 0)]
    push_counter = 1

    while queue:
        _, _, sid = heapq.heappop(queue)
        diag.pops += 1
        state = exp.states[sid]
        out_arcs = lat.outgoing[state.node]
        if not out_arcs:
            continue

        prev = state.history[-1]
        p_dyn = predict(state.dirichlet, prev)
        p_static = static.prob(state.history[1:])
        if fixed_lam is None or collect:
            conf = node_confidence.get(state.node)
            if conf is None:
                conf = acoustic_confidence([lat.arcs[a].w_ac for a in out_arcs])
                node_confidence[state.node] = conf
            div = jsd(p_dyn, p_static, cfg.eps_jsd)
        else:
            conf = float("nan")
            div = float("nan")
        lam = fixed_lam if fixed_lam is not None else lambda_k(conf, div)
        p_comb = combine(p_static, p_dyn, lam)
        if collect:
            diag.traces.append(
                StepTrace(
                    state_id=sid,
                    node=state.node,
                    depth=len(state.history) - 1,
                    confidence=conf,
                    divergence=div,
                    lam=lam,
                    p_static=p_static,
                    p_dyn=p_dyn,
                    p_comb=p_comb,
                )
            )

        for arc_id in out_arcs:
            arc = lat.arcs[arc_id]
            q = label_map[arc.label]
            weight = arc.w_ac + beta * math.log(p_comb[q - 1])
            child = ExpandedState(
                id=len(exp.states),
                node=arc.dst,
                history=state.history + (q,),
                dirichlet=update(state.dirichlet, prev, q, cfg.decay_scope),
                acc_score=state.acc_score + weight,
                parent=sid,
                arc_id=arc_id,
            )
            exp.states.append(child)
            exp.arcs.append(ExpandedArc(sid, child.id, q, weight, arc_id))
            if arc.dst in lat.finals:
                exp.terminals.append(child.id)
            heapq.heappush(queue, (-child.acc_score, push_counter, child.id))
            push_counter += 1
            diag.pushes += 1

        diag.max_queue_size = max(diag.max_queue_size, len(queue))
        if prune_active and queue:
            queue = _prune(queue, exp, cfg, diag)

    if not exp.terminals:
        raise RescoreError(
            "no terminal state survived pruning; widen k_beam or delta_beam"
        )
    best = viterbi_expanded(exp)
    return best, exp, diag


def _prune(
    queue: list[tuple[float, int, int]],
    exp: ExpandedLattice,
    cfg: RescoreConfig,
    diag: RescoreDiagnostics,
) -> list[tuple[float, int, int]]:
    """Score-band then capacity pruning; FIFO on exact ties."""
    if cfg.beam_scope == "global":
        n0 = len(queue)
        if math.isfinite(cfg.delta_beam):
            # The heap top is the best queued score.
            cutoff = queue[0][0] + cfg.delta_beam
            kept = [e for e in queue if e[0] <= cutoff]
            diag.pruned_band += n0 - len(kept)
        else:
            kept = queue
        if len(kept) > cfg.k_beam:
            kept.sort()
            diag.pruned_capacity += len(kept) - cfg.k_beam
            return kept[: cfg.k_beam]  # a sorted list is a valid heap
        if kept is queue or len(kept) == n0:
            return queue
        heapq.heapify(kept)
        return kept

    by_depth: dict[int, list[tuple[float, int, int]]] = {}
    for entry in queue:
        depth = len(exp.states[entry[2]].history) - 1
        by_depth.setdefault(depth, []).append(entry)
    kept = []
    for group in by_depth.values():
        if math.isfinite(cfg.delta_beam):
            best_neg = min(e[0] for e in group)
            within = [e for e in group if e[0] <= best_neg + cfg.delta_beam]
            diag.pruned_band += len(group) - len(within)
        else:
            within = group
        if len(within) > cfg.k_beam:
            within.sort()
            diag.pruned_capacity += len(within) - cfg.k_beam
            within = within[: cfg.k_beam]
        kept.extend(within)
    heapq.heapify(kept)
    return kept


def viterbi_expanded(exp: ExpandedLattice) -> StrokeSequence:
    """History of the best-scoring terminal state.

    Ties break on the lexicographically smallest chain of original lattice
    arc ids, matching the acoustic Viterbi tie-break.
    """
    if not exp.terminals:
        raise RescoreError("expanded lattice has no terminal state")
    best_id: int | None = None
    best_chain: tuple[int, ...] | None = None
    for sid in exp.terminals:
        st = exp.states[sid]
        if best_id is None or st.acc_score > exp.states[best_id].acc_score:
            best_id, best_chain = sid, None
        elif st.acc_score == exp.states[best_id].acc_score:
            if best_chain is None:
                best_chain = exp.arc_chain(best_id)
            chain = exp.arc_chain(sid)
            if chain < best_chain:
                best_id, best_chain = sid, chain
    return StrokeSequence(exp.states[best_id].history[1:])


def _map_labels(lat: Lattice, vocab: StrokeVocabulary) -> dict[int, int]:
    """Lattice stroke ids -> model stroke ids, by symbol."""
    if lat.vocab.symbols == vocab.symbols:
        return {sid: sid for sid in lat.vocab.playable_ids}
    mapping: dict[int, int] = {}
    missing: list[str] = []
    for sid in lat.vocab.playable_ids:
        symbol = lat.vocab.symbol_of(sid)
        if symbol in vocab:
            mapping[sid] = vocab.id_of(symbol)
        else:
            missing.append(symbol)
    if missing:
        raise VocabularyMismatchError(
            f"lattice strokes missing from model vocabulary: {', '.join(sorted(missing))}"
        )
    return mapping


def dumps_expanded(exp: ExpandedLattice) -> str:
    """Debug dump in the lattice text format plus per-state history comments.

    Node ids are expanded-state ids.  Not loadable as a model input.
    """
    lines = ["lattice v1", f"vocab {exp.vocab.num_playable}", f"start {exp.start_state}"]
    if exp.terminals:
        lines.append("final " + " ".join(str(t) for t in exp.terminals))
    for arc in exp.arcs:
        lines.append(
            f"arc {arc.src} {arc.dst} {exp.vocab.symbol_of(arc.label)} {float(arc.weight)!r}"
        )
    for st in exp.states:
        syms = " ".join(exp.vocab.symbol_of(s) for s in st.history[1:])
        lines.append(f"# history {st.id} {syms}".rstrip())
    return "".join(f"{l}\n" for l in lines)


def save_expanded(exp: ExpandedLattice, path: str | Path) -> None:
    Path(path).write_text(dumps_expanded(exp), encoding="utf-8")
