"""Listen-before-talk coexistence simulator on the unlicensed band.

Every contender (operator link or plain Wi-Fi access point) repeats
the same cycle on the shared channel: sense idle for a DIFS, count
down a backoff drawn uniformly from its contention window in whole
idle slots, then hold the channel for one occupancy period.  Sensing
a neighbor freezes the countdown; after the channel frees, a full
DIFS must elapse before the frozen remainder continues.  A station
whose counter expires less than one slot after a neighbor started
transmitting cannot have sensed the preamble yet and transmits too;
overlapping transmissions between mutual sensers are collisions, the
air they burn counts for nobody, and everyone involved redraws.

Channel occupancy defaults to an exponentially distributed duration
with the configured mean.  Fixed-length occupancy is available, but
at high duty cycles it makes the contention process nearly periodic:
small dense graphs then stick in whichever independent set grabbed
the channel first for many seconds at a time, and short measurements
stop being reproducible across seeds.

All randomness flows from one seeded generator, so identical inputs
give bit-identical statistics.

Access probability of a contender is its fraction of wall time spent
in successful transmissions, reported raw and normalized against the
closed-form share of an isolated station with identical parameters
(an unopposed contender therefore scores 1.0).
"""

from __future__ import annotations

import hashlib
import math
import random
import zlib
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

from .contention import (
    CanonicalForm,
    ContentionGraph,
    Vertex,
    canonical_form,
    enumerate_connected_colored_graphs,
    graph_from_canonical,
)
from .scenario import LAA, NODE_DEFAULTS, WIFI, Scenario, path_loss_db

DEFAULT_SLOT_TIME_S = 9e-6

SATURATED = "saturated"
POISSON = "poisson"

EXPONENTIAL = "exponential"
FIXED = "fixed"


class SimConfigError(ValueError):
    """Simulation parameters are unusable as given."""


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 10.0
    seed: int = 0
    slot_time_s: float = DEFAULT_SLOT_TIME_S
    arrivals: str = SATURATED
    arrival_rate_hz: float = 1000.0
    occupancy: str = EXPONENTIAL
    doubling_backoff: bool = False
    record_timeline: bool = False

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise SimConfigError(f"duration must be positive, got {self.duration_s}")
        if self.slot_time_s <= 0:
            raise SimConfigError(f"slot time must be positive, got {self.slot_time_s}")
        if self.arrivals not in (SATURATED, POISSON):
            raise SimConfigError(f"unknown arrival model {self.arrivals!r}")
        if self.arrivals == POISSON and self.arrival_rate_hz <= 0:
            raise SimConfigError(
                f"poisson arrivals need a positive rate, got {self.arrival_rate_hz}"
            )
        if self.occupancy not in (EXPONENTIAL, FIXED):
            raise SimConfigError(f"unknown occupancy model {self.occupancy!r}")


@dataclass(frozen=True)
class ContenderSpec:
    id: str
    tech: str
    difs_s: float
    txop_s: float
    cw_min: int
    cw_max: int


@dataclass(frozen=True)
class LinkStats:
    id: str
    tech: str
    duration_s: float
    airtime_s: float
    access_share: float
    normalized_access: float
    tx_count: int
    collision_count: int
    contention_s: float
    queue_wait_s: float


@dataclass(frozen=True)
class SimOutcome:
    stats: dict[str, LinkStats]
    # (contender id, start time, end time, collided); populated on request
    timeline: tuple[tuple[str, float, float, bool], ...] = ()


def isolated_access_share(
    difs_s: float,
    txop_s: float,
    cw_min: int,
    cw_max: int,
    slot_time_s: float = DEFAULT_SLOT_TIME_S,
) -> float:
    """Long-run busy fraction of a station that never senses anyone.

    One renewal cycle is DIFS + mean backoff + mean occupancy; the
    occupancy distribution does not matter, only its mean.
    """
    mean_backoff_s = (cw_min + cw_max) / 2.0 * slot_time_s
    return txop_s / (txop_s + difs_s + mean_backoff_s)


def run_lbt(
    specs: list[ContenderSpec],
    neighbor_masks: list[int],
    config: SimConfig,
) -> SimOutcome:
    """Simulate listen-before-talk contention among ``specs``.

    ``neighbor_masks[i]`` holds one bit per contender that contender
    ``i`` senses.  Masks must be symmetric and irreflexive.
    """
    config.validate()
    n = len(specs)
    slot = config.slot_time_s
    for s in specs:
        if slot >= s.difs_s:
            raise SimConfigError(
                f"slot time {slot} s must be shorter than DIFS {s.difs_s} s of {s.id}"
            )
        if not (0 <= s.cw_min <= s.cw_max):
            raise SimConfigError(f"bad contention window on {s.id}")
    for i, m in enumerate(neighbor_masks):
        if m >> i & 1:
            raise SimConfigError(f"contender {specs[i].id} senses itself")
        for j in range(n):
            if (m >> j & 1) != (neighbor_masks[j] >> i & 1):
                raise SimConfigError("sense masks are not symmetric")

    if n == 0:
        return SimOutcome(stats={})

    horizon = config.duration_s
    rng = random.Random(config.seed)
    randint = rng.randint
    expo = rng.expovariate

    D = [s.difs_s for s in specs]
    HOLD = [s.txop_s for s in specs]
    LO = [s.cw_min for s in specs]
    HI = [s.cw_max for s in specs]
    masks = neighbor_masks

    saturated = config.arrivals == SATURATED
    rate = config.arrival_rate_hz
    exponential = config.occupancy == EXPONENTIAL
    doubling = config.doubling_backoff
    record = config.record_timeline

    INF = math.inf
    busy = 0
    counting = [False] * n
    anchor = [0.0] * n  # where the current uninterrupted sensing run began
    rem = [0] * n  # whole backoff slots still to complete
    fire_at = [INF] * n  # finite iff counting with a clear channel
    cwhi = list(HI)
    tx_start = [0.0] * n
    tx_end = [INF] * n
    tx_bad = [False] * n
    ready = [0.0] * n  # when the head frame last began contending
    arrivals: list[deque[float]] = [deque() for _ in range(n)]
    next_arr = [INF] * n
    airtime = [0.0] * n
    ok_count = [0] * n
    bad_count = [0] * n
    contention = [0.0] * n
    queue_wait = [0.0] * n
    timeline: list[tuple[str, float, float, bool]] = []

    def hold_time(i: int) -> float:
        return expo(1.0 / HOLD[i]) if exponential else HOLD[i]

    for i in range(n):
        if saturated:
            counting[i] = True
            rem[i] = randint(LO[i], cwhi[i])
            fire_at[i] = D[i] + rem[i] * slot
        else:
            next_arr[i] = expo(rate)

    while True:
        t_end = INF
        b = busy
        while b:
            low = b & -b
            i = low.bit_length() - 1
            b ^= low
            if tx_end[i] < t_end:
                t_end = tx_end[i]
        t_fire = min(fire_at)
        t_arr = min(next_arr) if not saturated else INF

        if min(t_end, t_arr, t_fire) >= horizon:
            break

        if t_end <= t_arr and t_end <= t_fire:
            t = t_end
            b = busy
            while b:
                low = b & -b
                i = low.bit_length() - 1
                b ^= low
                if tx_end[i] != t:
                    continue
                busy ^= low
                tx_end[i] = INF
                if tx_bad[i]:
                    bad_count[i] += 1
                    if doubling:
                        cwhi[i] = min(2 * cwhi[i] + 1, 1023)
                else:
                    ok_count[i] += 1
                    airtime[i] += t - tx_start[i]
                    if doubling:
                        cwhi[i] = HI[i]
                if record:
                    timeline.append((specs[i].id, tx_start[i], t, tx_bad[i]))
                if not saturated:
                    queue_wait[i] += tx_start[i] - arrivals[i].popleft()
                if saturated or arrivals[i]:
                    counting[i] = True
                    rem[i] = randint(LO[i], cwhi[i])
                    ready[i] = t
            # the channel just quieted down for somebody: restart their DIFS
            for j in range(n):
                if counting[j] and fire_at[j] == INF and not busy & masks[j]:
                    anchor[j] = t
                    fire_at[j] = t + D[j] + rem[j] * slot
        elif t_arr <= t_fire:
            t = t_arr
            for i in range(n):
                if next_arr[i] == t:
                    arrivals[i].append(t)
                    next_arr[i] = t + expo(rate)
                    if len(arrivals[i]) == 1 and not busy >> i & 1 and not counting[i]:
                        counting[i] = True
                        rem[i] = randint(LO[i], cwhi[i])
                        ready[i] = t
                        if not busy & masks[i]:
                            anchor[i] = t
                            fire_at[i] = t + D[i] + rem[i] * slot
        else:
            t = t_fire
            # counters expiring within one slot of the first cannot sense
            # the new transmission in time, so the whole batch goes on air
            limit = t + slot * (1.0 - 1e-9)
            batch = [i for i in range(n) if fire_at[i] < limit]
            batch_mask = 0
            for i in batch:
                batch_mask |= 1 << i
            fired = dict()
            for i in batch:
                fired[i] = fire_at[i]
                counting[i] = False
                busy |= 1 << i
                tx_start[i] = fire_at[i]
                tx_end[i] = fire_at[i] + hold_time(i)
                tx_bad[i] = bool(batch_mask & masks[i])
                contention[i] += fire_at[i] - ready[i]
                fire_at[i] = INF
            # bystanders freeze: completed idle slots are banked, the
            # partial slot and all DIFS progress are lost
            for j in range(n):
                if fire_at[j] != INF and busy & masks[j]:
                    beta = min(fired[i] for i in batch if masks[j] >> i & 1)
                    elapsed = beta - anchor[j] - D[j]
                    if elapsed > 0:
                        done = int(elapsed / slot + 1e-7)
                        rem[j] = max(0, rem[j] - done)
                    fire_at[j] = INF

    for i in range(n):
        if busy >> i & 1:
            end = min(tx_end[i], horizon)
            if not tx_bad[i]:
                airtime[i] += max(0.0, end - tx_start[i])
            if record:
                timeline.append((specs[i].id, tx_start[i], end, tx_bad[i]))

    stats = {}
    for i, s in enumerate(specs):
        share = airtime[i] / horizon
        iso = isolated_access_share(s.difs_s, s.txop_s, s.cw_min, s.cw_max, slot)
        stats[s.id] = LinkStats(
            id=s.id,
            tech=s.tech,
            duration_s=horizon,
            airtime_s=airtime[i],
            access_share=share,
            normalized_access=share / iso,
            tx_count=ok_count[i],
            collision_count=bad_count[i],
            contention_s=contention[i],
            queue_wait_s=queue_wait[i],
        )
    return SimOutcome(stats=stats, timeline=tuple(timeline))


# -- scenario wiring -------------------------------------------------------


@dataclass(frozen=True)
class SenseMatrix:
    """Pairwise detection between nodes: ``hears[a][b]`` means node a
    receives node b's transmission at or above a's clear-channel
    threshold.  Detection in either direction makes the pair contend."""

    node_ids: tuple[str, ...]
    hears: tuple[tuple[bool, ...], ...]

    def index(self, node_id: str) -> int:
        return self.node_ids.index(node_id)

    def adjacent(self, a: str, b: str) -> bool:
        if a == b:
            return False
        ia, ib = self.index(a), self.index(b)
        return self.hears[ia][ib] or self.hears[ib][ia]


def build_sense_matrix(scenario: Scenario) -> SenseMatrix:
    nodes = scenario.nodes
    carrier = scenario.band.carrier_frequency_ghz
    rows = []
    for a in nodes:
        row = []
        for b in nodes:
            if a.id == b.id:
                row.append(True)
                continue
            dx = a.position_m[0] - b.position_m[0]
            dy = a.position_m[1] - b.position_m[1]
            dist = math.hypot(dx, dy)
            if dist <= 0.0:
                row.append(True)  # co-located radios always hear each other
                continue
            received = b.tx_power_dbm - path_loss_db(dist, carrier)
            row.append(received >= a.cca_threshold_dbm)
        rows.append(tuple(row))
    return SenseMatrix(node_ids=tuple(n.id for n in nodes), hears=tuple(rows))


def unlicensed_contenders(scenario: Scenario) -> list[tuple[ContenderSpec, str, int | None]]:
    """Contenders on the shared band: one per operator link plus one per
    Wi-Fi access point that serves no link.  Returns (spec, serving
    node id, owner)."""
    out = []
    serving = {l.node for l in scenario.links}
    for l in scenario.links:
        node = scenario.node(l.node)
        out.append(
            (
                ContenderSpec(
                    id=l.id,
                    tech=node.kind,
                    difs_s=node.difs_s,
                    txop_s=node.txop_s,
                    cw_min=node.cw_min,
                    cw_max=node.cw_max,
                ),
                node.id,
                l.owner,
            )
        )
    for node in scenario.nodes:
        if node.kind == WIFI and node.id not in serving:
            out.append(
                (
                    ContenderSpec(
                        id=node.id,
                        tech=WIFI,
                        difs_s=node.difs_s,
                        txop_s=node.txop_s,
                        cw_min=node.cw_min,
                        cw_max=node.cw_max,
                    ),
                    node.id,
                    None,
                )
            )
    return out


def build_contention_graph(scenario: Scenario) -> ContentionGraph:
    """Vertices are unlicensed contenders; edges mean detection in at
    least one direction.

    Two contenders served by the same physical node share one radio
    and are always adjacent.
    """
    sense = build_sense_matrix(scenario)
    contenders = unlicensed_contenders(scenario)
    verts = [Vertex(id=spec.id, tech=spec.tech, owner=owner) for spec, _, owner in contenders]
    edges = set()
    for i, (_, node_a, _) in enumerate(contenders):
        for j in range(i + 1, len(contenders)):
            node_b = contenders[j][1]
            if node_a == node_b or sense.adjacent(node_a, node_b):
                edges.add((verts[i].id, verts[j].id))
    return ContentionGraph.build(verts, edges)


def run_coexistence(scenario: Scenario, config: SimConfig) -> SimOutcome:
    """Simulate the scenario's unlicensed band and report per-link stats."""
    graph = build_contention_graph(scenario)
    contenders = unlicensed_contenders(scenario)
    specs = [spec for spec, _, _ in contenders]
    order = {spec.id: i for i, spec in enumerate(specs)}
    masks = [0] * len(specs)
    for a, b in graph.edges:
        ia, ib = order[a], order[b]
        masks[ia] |= 1 << ib
        masks[ib] |= 1 << ia
    return run_lbt(specs, masks, config)


def simulate_graph(
    graph: ContentionGraph,
    config: SimConfig,
    lbt_params: dict[str, dict] | None = None,
) -> SimOutcome:
    """Simulate an abstract contention graph with per-technology LBT
    defaults (overridable through ``lbt_params``)."""
    params = lbt_params or NODE_DEFAULTS
    specs = []
    for v in graph.vertices:
        p = params[v.tech]
        specs.append(
            ContenderSpec(
                id=v.id,
                tech=v.tech,
                difs_s=p["difs_s"],
                txop_s=p["txop_s"],
                cw_min=p["cw_min"],
                cw_max=p["cw_max"],
            )
        )
    return run_lbt(specs, graph.adjacency_masks(), config)


# -- measured access-probability tables ------------------------------------


@dataclass(frozen=True)
class TableEntry:
    key: str
    size: int
    colors: tuple[str, ...]
    edge_bits: int
    access: tuple[float, ...]
    raw_share: tuple[float, ...]


@dataclass
class AccessTable:
    """Measured per-vertex access probabilities for small connected
    contention graphs, keyed by canonical form.  ``access`` values sit
    in canonical vertex order and are averaged over automorphism
    orbits, so symmetric positions score identically."""

    max_size: int
    duration_s: float
    slot_time_s: float
    seed: int
    occupancy: str = EXPONENTIAL
    doubling_backoff: bool = False
    entries: dict[str, TableEntry] = field(default_factory=dict)

    def lookup(self, form: CanonicalForm) -> TableEntry | None:
        return self.entries.get(form.key)

    def params_line(self) -> str:
        return (
            f"max_size={self.max_size} duration_s={self.duration_s!r} "
            f"slot_time_s={self.slot_time_s!r} seed={self.seed} "
            f"occupancy={self.occupancy} "
            f"doubling_backoff={int(self.doubling_backoff)}"
        )

    def content_key(self) -> str:
        return hashlib.sha256(self.params_line().encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        lines = ["# slicenet access table v1", f"# {self.params_line()}"]
        for key in sorted(self.entries):
            e = self.entries[key]
            acc = ",".join(repr(x) for x in e.access)
            raw = ",".join(repr(x) for x in e.raw_share)
            lines.append(f"{key}\t{acc}\t{raw}")
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def load(path: str | Path) -> "AccessTable":
        text = Path(path).read_text()
        params: dict[str, str] = {}
        entries: dict[str, TableEntry] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                for tokens in line[1:].strip().split():
                    if "=" in tokens:
                        k, v = tokens.split("=", 1)
                        params[k] = v
                continue
            key, acc, raw = line.split("\t")
            size_s, colors, _degs, bits_hex = key.split(";")
            entries[key] = TableEntry(
                key=key,
                size=int(size_s),
                colors=tuple(colors),
                edge_bits=int(bits_hex, 16),
                access=tuple(float(x) for x in acc.split(",")),
                raw_share=tuple(float(x) for x in raw.split(",")),
            )
        return AccessTable(
            max_size=int(params.get("max_size", 0)),
            duration_s=float(params.get("duration_s", 0.0)),
            slot_time_s=float(params.get("slot_time_s", DEFAULT_SLOT_TIME_S)),
            seed=int(params.get("seed", 0)),
            occupancy=params.get("occupancy", EXPONENTIAL),
            doubling_backoff=bool(int(params.get("doubling_backoff", 0))),
            entries=entries,
        )


def entry_seed(base_seed: int, key: str) -> int:
    """Stable per-entry stream; crc avoids Python's salted hash."""
    return (base_seed * 2654435761 + zlib.crc32(key.encode())) & 0x7FFFFFFF


def measure_entry(form: CanonicalForm, config: SimConfig) -> TableEntry:
    graph = graph_from_canonical(form.size, form.colors, form.edge_bits)
    cfg = replace(
        config, seed=entry_seed(config.seed, form.key), record_timeline=False
    )
    outcome = simulate_graph(graph, cfg)
    access = [outcome.stats[f"v{p}"].normalized_access for p in range(form.size)]
    raw = [outcome.stats[f"v{p}"].access_share for p in range(form.size)]
    # vertices in one automorphism orbit are statistically identical;
    # report the orbit mean so symmetry is exact in the table
    for orbit in set(form.orbits):
        members = [p for p in range(form.size) if form.orbits[p] == orbit]
        a = sum(access[p] for p in members) / len(members)
        r = sum(raw[p] for p in members) / len(members)
        for p in members:
            access[p] = a
            raw[p] = r
    return TableEntry(
        key=form.key,
        size=form.size,
        colors=form.colors,
        edge_bits=form.edge_bits,
        access=tuple(access),
        raw_share=tuple(raw),
    )


def measure_table(
    max_size: int,
    config: SimConfig,
    cache_dir: str | Path | None = None,
    progress=None,
) -> AccessTable:
    """Measure access probabilities for every connected colored graph
    up to ``max_size`` vertices.

    Each entry runs on its own seed derived from ``config.seed`` and
    the canonical key, so the table is independent of enumeration
    order.  With ``cache_dir`` set, a previously measured table with
    identical parameters is reused from disk.
    """
    table = AccessTable(
        max_size=max_size,
        duration_s=config.duration_s,
        slot_time_s=config.slot_time_s,
        seed=config.seed,
        occupancy=config.occupancy,
        doubling_backoff=config.doubling_backoff,
    )
    cache_path = None
    if cache_dir is not None:
        cache_path = Path(cache_dir) / f"table_{max_size}_{table.content_key()}.tsv"
        if cache_path.exists():
            return AccessTable.load(cache_path)
    forms = enumerate_connected_colored_graphs(max_size)
    for idx, form in enumerate(forms):
        table.entries[form.key] = measure_entry(form, config)
        if progress is not None:
            progress(idx + 1, len(forms), form.key)
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        table.save(cache_path)
    return table
