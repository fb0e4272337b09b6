"""The spatial coalescent engine: exact event sampling with a full event log.

Ancestral lines carry torus-site labels. Each block's label performs an
independent rate-1 simple random walk; co-located blocks merge according to
the configured measure's rates, or instantaneously in coalescing-random-walk
mode. An optional per-line kill rate implements infinite-alleles mutation.

All model time is unscaled; rescaling by the torus time scale happens in the
statistics layers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

from . import _kernel
from .partitions import LabeledPartition, Site
from .rates import LambdaMeasure, Mechanism, RateTable, parse_mechanism
from .torus import TorusSpec

#: Per-replicate event guard; torus recurrence guarantees a.s. termination,
#: this protects batch runs from pathological configurations.
DEFAULT_EVENT_CAP = 10**9

_KIND_NAMES = {_kernel.MIG: "migration", _kernel.MERGE: "merge", _kernel.KILL: "mutation"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


class RunawaySimulationError(RuntimeError):
    """Raised when a run exceeds its event cap; carries the partial log."""

    def __init__(self, message: str, log: "EventLog"):
        super().__init__(message)
        self.log = log


def _coerce_mechanism(mechanism) -> Mechanism:
    if isinstance(mechanism, Mechanism):
        return mechanism
    if isinstance(mechanism, str):
        return parse_mechanism(mechanism)
    if isinstance(mechanism, LambdaMeasure):
        return Mechanism("custom", mechanism, False)
    if mechanism is None:
        # test-harness mode: migration only, merging disabled
        return Mechanism("none", None, False)
    raise TypeError(f"cannot interpret mechanism {mechanism!r}")


@dataclass
class Event:
    """One simulator transition. ``blocks`` holds block ids (min elements)."""

    time: float
    kind: str  # "migration" | "merge" | "mutation"
    blocks: Tuple[int, ...]
    src: Optional[Site] = None
    dst: Optional[Site] = None
    size: Optional[int] = None

    def to_json(self) -> str:
        rec = {"t": self.time, "kind": self.kind, "blocks": list(self.blocks),
               "from": list(self.src) if self.src is not None else None,
               "to": list(self.dst) if self.dst is not None else None}
        if self.size is not None:
            rec["size"] = self.size
        return json.dumps(rec)

    @classmethod
    def from_json(cls, line: str) -> "Event":
        rec = json.loads(line)
        return cls(
            time=float(rec["t"]),
            kind=rec["kind"],
            blocks=tuple(int(b) for b in rec["blocks"]),
            src=tuple(rec["from"]) if rec.get("from") is not None else None,
            dst=tuple(rec["to"]) if rec.get("to") is not None else None,
            size=rec.get("size"),
        )


class CoalescentState:
    """Mutable simulation state of one replicate.

    Not shareable while running; run replicates in parallel with independent
    generators instead.
    """

    def __init__(
        self,
        partition: LabeledPartition,
        mechanism,
        torus: TorusSpec,
        *,
        mutation_rate: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ):
        if mutation_rate < 0:
            raise ValueError("mutation rate must be >= 0")
        self.torus = torus
        self.mechanism = _coerce_mechanism(mechanism)
        self.mutation_rate = float(mutation_rate)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.initial = partition
        n = partition.n
        self.n = n
        if self.mechanism.instantaneous or self.mechanism.measure is None:
            table = RateTable(None, n)
        else:
            table = self.mechanism.measure.rate_table(n)
        self._totals = table.totals
        self._kcum = table.kcum

        m = torus.n_sites
        nb = partition.n_blocks
        self._slot_site = np.full(n, -1, np.int32)
        self._slot_min = np.zeros(n, np.int32)
        self._slot_size = np.zeros(n, np.int32)
        self._elem_slot = np.full(n, -1, np.int32)
        self._alive_ids = np.zeros(n, np.int32)
        self._alive_pos = np.full(n, -1, np.int32)
        self._site_count = np.zeros(m, np.int32)
        self._multi_sites = np.zeros(n, np.int32)
        self._multi_pos = np.full(m, -1, np.int32)
        self._spectrum = np.zeros(n + 1, np.int64)
        self._ireg = np.zeros(4, np.int64)
        self._freg = np.zeros(2, np.float64)

        for slot, (block, label) in enumerate(zip(partition.blocks, partition.labels)):
            flat = torus.site_index(label)
            self._slot_site[slot] = flat
            self._slot_min[slot] = block[0]
            self._slot_size[slot] = len(block)
            for e in block:
                self._elem_slot[e - 1] = slot
            self._alive_ids[slot] = slot
            self._alive_pos[slot] = slot
            self._site_count[flat] += 1
        self._ireg[_kernel.N_ALIVE] = nb
        nm = 0
        for flat in np.flatnonzero(self._site_count >= 2):
            self._multi_pos[flat] = nm
            self._multi_sites[nm] = flat
            nm += 1
        self._ireg[_kernel.N_MULTI] = nm

    # -- inspection -----------------------------------------------------

    @property
    def clock(self) -> float:
        return float(self._freg[_kernel.CLOCK])

    @property
    def n_blocks(self) -> int:
        return int(self._ireg[_kernel.N_ALIVE])

    @property
    def n_events(self) -> int:
        return int(self._ireg[_kernel.EV_TOTAL])

    @property
    def block_time_integral(self) -> float:
        """Accumulated integral of the block count over time."""
        return float(self._freg[_kernel.BLOCKTIME])

    @property
    def spectrum_counts(self) -> np.ndarray:
        """Kill tallies: counts[k] = alleles recorded with block size k."""
        return self._spectrum.copy()

    def surviving_blocks(self) -> tuple[tuple[tuple[int, ...], Site], ...]:
        """Blocks still in the system as ((elements, site), ...) sorted by min."""
        groups: dict[int, list[int]] = {}
        for e in range(self.n):
            slot = self._elem_slot[e]
            if slot >= 0:
                groups.setdefault(int(slot), []).append(e + 1)
        out = []
        for slot, elems in groups.items():
            site = self.torus.site_from_index(int(self._slot_site[slot]))
            out.append((tuple(sorted(elems)), site))
        out.sort(key=lambda t: t[0][0])
        return tuple(out)

    @property
    def partition(self) -> LabeledPartition:
        """Current labeled partition; requires that no line was killed."""
        blocks = self.surviving_blocks()
        if sum(len(b) for b, _ in blocks) != self.n:
            raise ValueError("lines were removed by mutation; partition is partial")
        return LabeledPartition([b for b, _ in blocks], [s for _, s in blocks])

    def occupancy(self) -> dict[Site, tuple[int, ...]]:
        """Map site -> min elements of the blocks at that site."""
        occ: dict[Site, list[int]] = {}
        for i in range(self.n_blocks):
            slot = int(self._alive_ids[i])
            site = self.torus.site_from_index(int(self._slot_site[slot]))
            occ.setdefault(site, []).append(int(self._slot_min[slot]))
        return {s: tuple(sorted(v)) for s, v in occ.items()}

    # -- advancing ------------------------------------------------------

    def _advance(self, *, stop_nblocks=-1, stop_time=np.inf, stop_on_meeting=False,
                 stop_dist=-1.0, max_events, event_cap, log_arrays=None):
        if log_arrays is None:
            et = np.empty(0, np.float64)
            ek = np.empty(0, np.uint8)
            ea = np.empty(0, np.int64)
            eb = np.empty(0, np.int64)
            ec = np.empty(0, np.int64)
            em = np.empty(0, np.uint64)
            log_enabled = False
        else:
            et, ek, ea, eb, ec, em = log_arrays
            log_enabled = True
        return _kernel.advance(
            self._slot_site, self._slot_min, self._slot_size, self._elem_slot,
            self._alive_ids, self._alive_pos, self._site_count,
            self._multi_sites, self._multi_pos,
            self._spectrum, self._ireg, self._freg,
            self._totals, self._kcum,
            self.torus.side, self.mutation_rate, self.mechanism.instantaneous,
            stop_nblocks, stop_time, stop_on_meeting, stop_dist,
            max_events, event_cap,
            log_enabled, et, ek, ea, eb, ec, em,
            self.rng,
        )


@dataclass
class EventLog:
    """Timed record of one replicate: initial state, events, terminal state."""

    initial: LabeledPartition
    torus: TorusSpec
    times: np.ndarray
    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    mask: np.ndarray
    final_blocks: tuple
    final_clock: float
    spectrum: np.ndarray
    status: str

    def __len__(self) -> int:
        return len(self.times)

    def event(self, i: int) -> Event:
        kind = int(self.kinds[i])
        t = float(self.times[i])
        torus = self.torus
        if kind == _kernel.MIG:
            return Event(t, "migration", (int(self.a[i]),),
                         torus.site_from_index(int(self.b[i])),
                         torus.site_from_index(int(self.c[i])))
        if kind == _kernel.MERGE:
            mask = int(self.mask[i])
            blocks = tuple(j + 1 for j in range(64) if mask >> j & 1)
            site = torus.site_from_index(int(self.b[i]))
            return Event(t, "merge", blocks, site, site)
        return Event(t, "mutation", (int(self.a[i]),),
                     torus.site_from_index(int(self.b[i])), None, int(self.c[i]))

    def events(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self.event(i)

    @property
    def final_partition(self) -> LabeledPartition:
        blocks = [b for b, _ in self.final_blocks]
        if sum(len(b) for b in blocks) != self.initial.n:
            raise ValueError("log contains kills; the terminal partition is partial")
        return LabeledPartition(blocks, [s for _, s in self.final_blocks])

    # -- replay ---------------------------------------------------------

    def replay(self):
        """Re-apply all events to the initial partition.

        Returns the reconstructed terminal block structure (same shape as
        ``final_blocks``) and the block-count trajectory; raises if any event
        is inconsistent.
        """
        members = {b[0]: set(b) for b in self.initial.blocks}
        label = {b[0]: lab for b, lab in zip(self.initial.blocks, self.initial.labels)}
        counts = [len(members)]
        for ev in self.events():
            if ev.kind == "migration":
                (m,) = ev.blocks
                if label[m] != ev.src:
                    raise ValueError(f"replay mismatch: block {m} not at {ev.src}")
                label[m] = ev.dst
            elif ev.kind == "merge":
                sites = {label[m] for m in ev.blocks}
                if len(sites) != 1 or sites != {ev.src}:
                    raise ValueError(f"replay mismatch: merge at {ev.src} of {ev.blocks}")
                target = min(ev.blocks)
                merged = set()
                for m in ev.blocks:
                    merged |= members.pop(m)
                    label.pop(m)
                members[target] = merged
                label[target] = ev.src
            else:  # mutation
                (m,) = ev.blocks
                if len(members[m]) != ev.size:
                    raise ValueError(f"replay mismatch: kill size {ev.size} != {len(members[m])}")
                members.pop(m)
                label.pop(m)
            counts.append(len(members))
        final = tuple(sorted(
            ((tuple(sorted(v)), label[k]) for k, v in members.items()),
            key=lambda t: t[0][0],
        ))
        return final, counts

    # -- timing observables ----------------------------------------------

    def first_meeting_time(self, i: int, j: int) -> Optional[float]:
        """First time the blocks holding i and j share a site (0 if initially)."""
        return self._first_time(i, j, by_label=True)

    def first_coalescence_time(self, i: int, j: int) -> Optional[float]:
        """First time i and j lie in the same block (0 if initially)."""
        return self._first_time(i, j, by_label=False)

    def _first_time(self, i, j, by_label):
        n = self.initial.n
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"elements must be in 1..{n}")
        owner = {}
        label = {}
        for b, lab in zip(self.initial.blocks, self.initial.labels):
            for e in b:
                owner[e] = b[0]
            label[b[0]] = lab
        def hit():
            if owner.get(i) is None or owner.get(j) is None:
                return False
            if owner[i] == owner[j]:
                return True
            return by_label and label[owner[i]] == label[owner[j]]
        if hit():
            return 0.0
        for ev in self.events():
            if ev.kind == "migration":
                label[ev.blocks[0]] = ev.dst
            elif ev.kind == "merge":
                target = min(ev.blocks)
                for m in ev.blocks:
                    label.pop(m, None)
                label[target] = ev.src
                for e, o in owner.items():
                    if o in ev.blocks:
                        owner[e] = target
            else:
                for e in list(owner):
                    if owner[e] == ev.blocks[0]:
                        owner[e] = None
                label.pop(ev.blocks[0], None)
                if owner.get(i) is None or owner.get(j) is None:
                    return None
            if hit():
                return float(ev.time)
        return None

    def jump_times(self):
        """Meeting and coalescence jump-time sequences with waiting times.

        Returns (tau, tau_c, sigma, sigma_c): tau lists the successive first
        meeting times of block pairs that had not met before (time-0 meetings
        excluded, matching tau_0 = 0), tau_c the merge event times; sigma are
        the corresponding waiting-time increments.
        """
        n = self.initial.n
        owner = {}
        site_of = {}
        for b, lab in zip(self.initial.blocks, self.initial.labels):
            for e in b:
                owner[e] = b[0]
            site_of[b[0]] = lab
        met = set()
        elems = sorted(owner)
        for x in range(len(elems)):
            for y in range(x + 1, len(elems)):
                i, j = elems[x], elems[y]
                if owner[i] == owner[j] or site_of[owner[i]] == site_of[owner[j]]:
                    met.add((i, j))
        taus = []
        tau_cs = []
        for ev in self.events():
            if ev.kind == "migration":
                site_of[ev.blocks[0]] = ev.dst
            elif ev.kind == "merge":
                target = min(ev.blocks)
                for m in ev.blocks:
                    site_of.pop(m, None)
                site_of[target] = ev.src
                for e in owner:
                    if owner[e] in ev.blocks:
                        owner[e] = target
                tau_cs.append(float(ev.time))
            else:
                for e in list(owner):
                    if owner[e] == ev.blocks[0]:
                        del owner[e]
                site_of.pop(ev.blocks[0], None)
            new_meeting = False
            live = sorted(owner)
            for x in range(len(live)):
                for y in range(x + 1, len(live)):
                    i, j = live[x], live[y]
                    if (i, j) in met:
                        continue
                    if owner[i] == owner[j] or site_of[owner[i]] == site_of[owner[j]]:
                        met.add((i, j))
                        new_meeting = True
            if new_meeting:
                taus.append(float(ev.time))
        sigma = [t1 - t0 for t0, t1 in zip([0.0] + taus[:-1], taus)]
        sigma_c = [t1 - t0 for t0, t1 in zip([0.0] + tau_cs[:-1], tau_cs)]
        return taus, tau_cs, sigma, sigma_c

    # -- serialization ----------------------------------------------------

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({
                "kind": "init",
                "partition": self.initial.to_text(),
                "L": self.torus.L,
            }) + "\n")
            for ev in self.events():
                fh.write(ev.to_json() + "\n")


def replay_jsonl(path):
    """Replay an events.jsonl file; returns the terminal block structure."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "init":
            raise ValueError("events file must start with an init record")
        partition = LabeledPartition.from_text(header["partition"])
        members = {b[0]: set(b) for b in partition.blocks}
        label = {b[0]: lab for b, lab in zip(partition.blocks, partition.labels)}
        for line in fh:
            if not line.strip():
                continue
            ev = Event.from_json(line)
            if ev.kind == "migration":
                label[ev.blocks[0]] = ev.dst
            elif ev.kind == "merge":
                target = min(ev.blocks)
                merged = set()
                for m in ev.blocks:
                    merged |= members.pop(m)
                    label.pop(m)
                members[target] = merged
                label[target] = ev.src
            else:
                members.pop(ev.blocks[0])
                label.pop(ev.blocks[0])
    return tuple(sorted(
        ((tuple(sorted(v)), label[k]) for k, v in members.items()),
        key=lambda t: t[0][0],
    ))


def next_event(state: CoalescentState):
    """Sample and apply the next event; returns (Event, dwell) or None.

    Instantaneous-mode merges triggered by a migration are reported as their
    own zero-dwell events on the following call.
    """
    cap = 4
    log_arrays = (
        np.empty(cap, np.float64), np.empty(cap, np.uint8), np.empty(cap, np.int64),
        np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.uint64),
    )
    before = state.clock
    state._ireg[_kernel.LOG_USED] = 0
    state._advance(max_events=1, event_cap=DEFAULT_EVENT_CAP, log_arrays=log_arrays)
    used = int(state._ireg[_kernel.LOG_USED])
    state._ireg[_kernel.LOG_USED] = 0
    if used == 0:
        return None  # absorbed or no event possible
    log = EventLog(
        initial=state.initial, torus=state.torus,
        times=log_arrays[0][:used], kinds=log_arrays[1][:used],
        a=log_arrays[2][:used], b=log_arrays[3][:used], c=log_arrays[4][:used],
        mask=log_arrays[5][:used],
        final_blocks=(), final_clock=state.clock, spectrum=state.spectrum_counts,
        status="step",
    )
    ev = log.event(0)
    return ev, ev.time - before


def run_until(
    state: CoalescentState,
    *,
    nblocks: Optional[int] = None,
    time: Optional[float] = None,
    meeting: bool = False,
    min_pairwise_distance: Optional[float] = None,
    stop: Optional[Callable[[CoalescentState], bool]] = None,
    log: bool = True,
    max_events: int = DEFAULT_EVENT_CAP,
) -> EventLog:
    """Run until the first satisfied stop condition and return the event log.

    Conditions may be combined; the run stops as soon as any holds. ``stop``
    is an arbitrary predicate evaluated before every event (slower path).
    With ``log=False`` the returned log carries no events (statistics such as
    the clock, spectrum and block-time integral remain available).
    """
    stop_nblocks = -1 if nblocks is None else int(nblocks)
    stop_time = np.inf if time is None else float(time)
    stop_dist = -1.0 if min_pairwise_distance is None else float(min_pairwise_distance)
    if min_pairwise_distance is not None and min_pairwise_distance < 0:
        raise ValueError("min_pairwise_distance must be >= 0")

    chunks = []
    total = 0
    status = None
    if stop is not None:
        while not stop(state):
            step = next_event(state)
            if step is None:
                status = _kernel.ABSORBED
                break
            if log:
                chunks.append(step[0])
            total += 1
            if total >= max_events:
                status = _kernel.RUNAWAY
                break
        else:
            status = _kernel.DONE
        times = np.array([e.time for e in chunks])
        kinds = np.array([_KIND_CODES[e.kind] for e in chunks], np.uint8)
        a = np.array([min(e.blocks) for e in chunks], np.int64)
        b = np.array([state.torus.site_index(e.src) if e.src else 0 for e in chunks], np.int64)
        c = np.zeros(len(chunks), np.int64)
        mask = np.zeros(len(chunks), np.uint64)
        for i, e in enumerate(chunks):
            if e.kind == "migration":
                c[i] = state.torus.site_index(e.dst)
            elif e.kind == "merge":
                m = 0
                for blk in e.blocks:
                    m |= 1 << (blk - 1)
                mask[i] = m
                c[i] = len(e.blocks)
            else:
                c[i] = e.size
        return _finish_log(state, times, kinds, a, b, c, mask, status)

    cap = 1024 if log else 0
    arrays = None
    if log:
        arrays = (
            np.empty(cap, np.float64), np.empty(cap, np.uint8), np.empty(cap, np.int64),
            np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.uint64),
        )
    parts = []
    while True:
        status = state._advance(
            stop_nblocks=stop_nblocks, stop_time=stop_time, stop_on_meeting=meeting,
            stop_dist=stop_dist, max_events=max_events - total,
            event_cap=DEFAULT_EVENT_CAP, log_arrays=arrays,
        )
        if log:
            used = int(state._ireg[_kernel.LOG_USED])
            parts.append(tuple(arr[:used].copy() for arr in arrays))
            state._ireg[_kernel.LOG_USED] = 0
            total += used
        if status == _kernel.LOG_FULL:
            cap *= 2
            arrays = (
                np.empty(cap, np.float64), np.empty(cap, np.uint8), np.empty(cap, np.int64),
                np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.uint64),
            )
            continue
        break

    if log and parts:
        merged = tuple(np.concatenate([p[i] for p in parts]) for i in range(6))
    else:
        merged = (np.empty(0, np.float64), np.empty(0, np.uint8), np.empty(0, np.int64),
                  np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.uint64))
    out = _finish_log(state, *merged, status)
    if status in (_kernel.BUDGET, _kernel.RUNAWAY):
        raise RunawaySimulationError(
            f"event cap reached after {state.n_events} events", out
        )
    return out


def _finish_log(state, times, kinds, a, b, c, mask, status) -> EventLog:
    names = {_kernel.DONE: "stopped", _kernel.ABSORBED: "absorbed",
             _kernel.BUDGET: "event-cap", _kernel.RUNAWAY: "event-cap",
             None: "stopped"}
    return EventLog(
        initial=state.initial, torus=state.torus,
        times=times, kinds=kinds, a=a, b=b, c=c, mask=mask,
        final_blocks=state.surviving_blocks(), final_clock=state.clock,
        spectrum=state.spectrum_counts, status=names.get(status, "stopped"),
    )
