"""Scenario data model: operators, services, radio nodes, links.

All quantities are stored in SI units (Hz, bits/s, seconds, meters).
Monetary prices are per bit.  Scenario files use YAML with explicit
units in field names; convenience fields ``min_throughput_mbps`` and
``price_per_mbit`` are converted on load.

A scenario ties together:

* service types (QoS floor and unit price per slice),
* mobile operators (licensed bandwidth, optional per-service
  overrides of floor/price),
* radio nodes (LAA base stations and plain Wi-Fi access points,
  with listen-before-talk parameters),
* links (one serving node, one user position, owned by exactly one
  operator),
* a band plan (shared unlicensed bandwidth, carrier frequency, and
  the per-service group of operators pooling licensed spectrum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

LAA = "laa"
WIFI = "wifi"
NODE_KINDS = (LAA, WIFI)

# Listen-before-talk defaults per node kind.  Wi-Fi idles longer before
# the backoff (DIFS) and holds the channel for a shorter burst.
NODE_DEFAULTS = {
    LAA: {
        "tx_power_dbm": 23.0,
        "cca_threshold_dbm": -62.0,
        "noise_floor_dbm": -100.0,
        "difs_s": 25e-6,
        "cw_min": 3,
        "cw_max": 7,
        "txop_s": 2.0e-3,
    },
    WIFI: {
        "tx_power_dbm": 23.0,
        "cca_threshold_dbm": -62.0,
        "noise_floor_dbm": -90.0,
        "difs_s": 34e-6,
        "cw_min": 3,
        "cw_max": 7,
        "txop_s": 1.504e-3,
    },
}


class ScenarioError(ValueError):
    """Base class for scenario file problems."""


class ScenarioParseError(ScenarioError):
    """The file is not well-formed YAML or lacks required structure."""


class ScenarioValidationError(ScenarioError):
    """A structural invariant is violated.

    ``invariant`` carries a short machine-readable name of the failed
    check; the message adds the offending entity.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def path_loss_db(distance_m: float, carrier_ghz: float) -> float:
    """Urban propagation loss in dB at ``distance_m`` meters.

    ``43.3 log10(d) + 11.5 + 20 log10(f_c)`` with the carrier in GHz.
    Raises ``ValueError`` outside the model's domain (non-positive
    distance or frequency).
    """
    if distance_m <= 0.0:
        raise ValueError(f"path loss undefined for distance {distance_m} m")
    if carrier_ghz <= 0.0:
        raise ValueError(f"path loss undefined for carrier {carrier_ghz} GHz")
    return 43.3 * math.log10(distance_m) + 11.5 + 20.0 * math.log10(carrier_ghz)


def rate_per_hz(snr_db: float) -> float:
    """Spectral efficiency bits/s/Hz for a given SNR in dB."""
    return math.log2(1.0 + 10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class ServiceType:
    """A slice class: identifier, QoS floor, and unit price."""

    id: int
    min_throughput_bps: float
    price_per_bit: float

    def validate(self) -> None:
        if self.min_throughput_bps < 0:
            raise ScenarioValidationError(
                "service-throughput-nonnegative",
                f"service {self.id} has min throughput {self.min_throughput_bps}",
            )
        if self.price_per_bit < 0:
            raise ScenarioValidationError(
                "service-price-nonnegative",
                f"service {self.id} has price {self.price_per_bit}",
            )


@dataclass(frozen=True)
class Mno:
    """A mobile operator with licensed spectrum to contribute.

    ``min_throughput_overrides_bps`` and ``price_overrides_per_bit``
    replace the service-type defaults for this operator only.
    """

    id: int
    licensed_bandwidth_hz: float
    min_throughput_overrides_bps: dict[int, float] = field(default_factory=dict)
    price_overrides_per_bit: dict[int, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.licensed_bandwidth_hz < 0:
            raise ScenarioValidationError(
                "mno-bandwidth-nonnegative",
                f"operator {self.id} has licensed bandwidth {self.licensed_bandwidth_hz}",
            )


@dataclass(frozen=True)
class Node:
    """A transmitter on the unlicensed band (LAA eNB or Wi-Fi AP)."""

    id: str
    kind: str
    position_m: tuple[float, float]
    owner: int | None = None
    tx_power_dbm: float = 23.0
    cca_threshold_dbm: float = -62.0
    noise_floor_dbm: float = -100.0
    difs_s: float = 25e-6
    cw_min: int = 3
    cw_max: int = 7
    txop_s: float = 2.0e-3

    def validate(self) -> None:
        if self.kind not in NODE_KINDS:
            raise ScenarioValidationError(
                "node-kind", f"node {self.id} has unknown kind {self.kind!r}"
            )
        if self.kind == WIFI and self.owner is not None:
            raise ScenarioValidationError(
                "wifi-node-unowned", f"wifi node {self.id} must not declare an owner"
            )
        if self.kind == LAA and self.owner is None:
            raise ScenarioValidationError(
                "laa-node-owned", f"laa node {self.id} must declare an owner"
            )
        if not (0 <= self.cw_min <= self.cw_max):
            raise ScenarioValidationError(
                "contention-window-ordered",
                f"node {self.id} has cw_min {self.cw_min}, cw_max {self.cw_max}",
            )
        if self.difs_s <= 0 or self.txop_s <= 0:
            raise ScenarioValidationError(
                "node-timing-positive",
                f"node {self.id} has difs {self.difs_s} s, txop {self.txop_s} s",
            )
        for coord in self.position_m:
            if not math.isfinite(coord):
                raise ScenarioValidationError(
                    "position-finite", f"node {self.id} at {self.position_m}"
                )


@dataclass(frozen=True)
class Link:
    """A downlink from a serving node to one user, owned by one operator.

    ``snr_db`` overrides the geometry-derived SNR when set; scenarios
    pin it for reproducible rate assumptions.
    """

    id: str
    owner: int
    node: str
    ue_position_m: tuple[float, float]
    snr_db: float | None = None


@dataclass(frozen=True)
class BandPlan:
    """Shared-spectrum parameters and per-service sharing groups.

    ``ssg`` maps a service id to the frozenset of operator ids pooling
    licensed spectrum for that slice.  Services absent from the map
    default to the full operator set.
    """

    unlicensed_bandwidth_hz: float
    carrier_frequency_ghz: float = 5.5
    ssg: dict[int, frozenset[int]] = field(default_factory=dict)

    def validate(self) -> None:
        if self.unlicensed_bandwidth_hz < 0:
            raise ScenarioValidationError(
                "band-unlicensed-nonnegative",
                f"unlicensed bandwidth {self.unlicensed_bandwidth_hz}",
            )
        if self.carrier_frequency_ghz <= 0:
            raise ScenarioValidationError(
                "band-carrier-positive",
                f"carrier frequency {self.carrier_frequency_ghz}",
            )


@dataclass(frozen=True)
class Scenario:
    services: tuple[ServiceType, ...]
    mnos: tuple[Mno, ...]
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    band: BandPlan

    def __post_init__(self):
        validate_scenario(self)

    # -- indexed access -------------------------------------------------

    def service(self, service_id: int) -> ServiceType:
        for s in self.services:
            if s.id == service_id:
                return s
        raise KeyError(service_id)

    def mno(self, mno_id: int) -> Mno:
        for m in self.mnos:
            if m.id == mno_id:
                return m
        raise KeyError(mno_id)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def links_of(self, mno_id: int) -> tuple[Link, ...]:
        return tuple(l for l in self.links if l.owner == mno_id)

    def sharing_group(self, service_id: int) -> frozenset[int]:
        default = frozenset(m.id for m in self.mnos)
        return self.band.ssg.get(service_id, default)

    # -- per-(operator, service) parameters -----------------------------

    def min_throughput_bps(self, mno_id: int, service_id: int) -> float:
        mno = self.mno(mno_id)
        if service_id in mno.min_throughput_overrides_bps:
            return mno.min_throughput_overrides_bps[service_id]
        return self.service(service_id).min_throughput_bps

    def price_per_bit(self, mno_id: int, service_id: int) -> float:
        mno = self.mno(mno_id)
        if service_id in mno.price_overrides_per_bit:
            return mno.price_overrides_per_bit[service_id]
        return self.service(service_id).price_per_bit

    # -- radio geometry --------------------------------------------------

    def link_distance_m(self, link: Link) -> float:
        node = self.node(link.node)
        dx = node.position_m[0] - link.ue_position_m[0]
        dy = node.position_m[1] - link.ue_position_m[1]
        return math.hypot(dx, dy)

    def link_snr_db(self, link: Link) -> float:
        if link.snr_db is not None:
            return link.snr_db
        node = self.node(link.node)
        loss = path_loss_db(self.link_distance_m(link), self.band.carrier_frequency_ghz)
        return node.tx_power_dbm - loss - node.noise_floor_dbm

    def link_rate_per_hz(self, link: Link) -> float:
        """Spectral efficiency of a link under its serving node's radio."""
        return rate_per_hz(self.link_snr_db(link))


def validate_scenario(sc: Scenario) -> None:
    """Check referential and numeric invariants, raising on the first failure."""
    for group, name in ((sc.services, "service"), (sc.mnos, "mno")):
        ids = [x.id for x in group]
        if len(ids) != len(set(ids)):
            raise ScenarioValidationError(f"{name}-ids-unique", f"duplicate ids in {ids}")
    for group, name in ((sc.nodes, "node"), (sc.links, "link")):
        ids = [x.id for x in group]
        if len(ids) != len(set(ids)):
            raise ScenarioValidationError(f"{name}-ids-unique", f"duplicate ids in {ids}")

    for s in sc.services:
        s.validate()
    for m in sc.mnos:
        m.validate()
    sc.band.validate()

    mno_ids = {m.id for m in sc.mnos}
    service_ids = {s.id for s in sc.services}
    node_ids = {n.id for n in sc.nodes}

    for n in sc.nodes:
        n.validate()
        if n.owner is not None and n.owner not in mno_ids:
            raise ScenarioValidationError(
                "node-owner-exists", f"node {n.id} owned by unknown operator {n.owner}"
            )
    for l in sc.links:
        if l.owner not in mno_ids:
            raise ScenarioValidationError(
                "link-owner-exists", f"link {l.id} owned by unknown operator {l.owner}"
            )
        if l.node not in node_ids:
            raise ScenarioValidationError(
                "link-node-exists", f"link {l.id} served by unknown node {l.node}"
            )
    for m in sc.mnos:
        for sid in (*m.min_throughput_overrides_bps, *m.price_overrides_per_bit):
            if sid not in service_ids:
                raise ScenarioValidationError(
                    "override-service-exists",
                    f"operator {m.id} overrides unknown service {sid}",
                )
    for sid, group in sc.band.ssg.items():
        if sid not in service_ids:
            raise ScenarioValidationError(
                "ssg-service-exists", f"sharing group for unknown service {sid}"
            )
        for mid in group:
            if mid not in mno_ids:
                raise ScenarioValidationError(
                    "ssg-member-exists",
                    f"sharing group of service {sid} names unknown operator {mid}",
                )


# -- serialization -------------------------------------------------------

MBPS = 1e6
PER_MBIT = 1e-6


def _num(raw: dict, key: str, entity: str) -> float:
    try:
        return float(raw[key])
    except KeyError:
        raise ScenarioParseError(f"{entity}: missing field {key!r}") from None
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{entity}: field {key!r} is not a number") from None


def _service_from_dict(raw: dict) -> ServiceType:
    sid = int(_num(raw, "id", "service"))
    if "min_throughput_bps" in raw:
        floor = _num(raw, "min_throughput_bps", f"service {sid}")
    else:
        floor = _num(raw, "min_throughput_mbps", f"service {sid}") * MBPS
    if "price_per_bit" in raw:
        price = _num(raw, "price_per_bit", f"service {sid}")
    else:
        price = _num(raw, "price_per_mbit", f"service {sid}") * PER_MBIT
    return ServiceType(id=sid, min_throughput_bps=floor, price_per_bit=price)


def _mno_from_dict(raw: dict) -> Mno:
    mid = int(_num(raw, "id", "mno"))
    floors: dict[int, float] = {}
    prices: dict[int, float] = {}
    for ov in raw.get("overrides", []) or []:
        sid = int(_num(ov, "service", f"mno {mid} override"))
        if "min_throughput_bps" in ov:
            floors[sid] = float(ov["min_throughput_bps"])
        elif "min_throughput_mbps" in ov:
            floors[sid] = float(ov["min_throughput_mbps"]) * MBPS
        if "price_per_bit" in ov:
            prices[sid] = float(ov["price_per_bit"])
        elif "price_per_mbit" in ov:
            prices[sid] = float(ov["price_per_mbit"]) * PER_MBIT
    return Mno(
        id=mid,
        licensed_bandwidth_hz=_num(raw, "licensed_bandwidth_hz", f"mno {mid}"),
        min_throughput_overrides_bps=floors,
        price_overrides_per_bit=prices,
    )


def _node_from_dict(raw: dict) -> Node:
    try:
        nid = str(raw["id"])
        kind = str(raw["kind"])
    except KeyError as exc:
        raise ScenarioParseError(f"node: missing field {exc.args[0]!r}") from None
    defaults = NODE_DEFAULTS.get(kind, NODE_DEFAULTS[LAA])
    pos = raw.get("position_m")
    if not isinstance(pos, (list, tuple)) or len(pos) != 2:
        raise ScenarioParseError(f"node {nid}: position_m must be [x, y]")
    owner = raw.get("owner")
    return Node(
        id=nid,
        kind=kind,
        position_m=(float(pos[0]), float(pos[1])),
        owner=None if owner in (None, WIFI) else int(owner),
        tx_power_dbm=float(raw.get("tx_power_dbm", defaults["tx_power_dbm"])),
        cca_threshold_dbm=float(raw.get("cca_threshold_dbm", defaults["cca_threshold_dbm"])),
        noise_floor_dbm=float(raw.get("noise_floor_dbm", defaults["noise_floor_dbm"])),
        difs_s=float(raw.get("difs_s", defaults["difs_s"])),
        cw_min=int(raw.get("cw_min", defaults["cw_min"])),
        cw_max=int(raw.get("cw_max", defaults["cw_max"])),
        txop_s=float(raw.get("txop_s", defaults["txop_s"])),
    )


def _link_from_dict(raw: dict) -> Link:
    try:
        lid = str(raw["id"])
        owner = int(raw["owner"])
        node = str(raw["node"])
    except KeyError as exc:
        raise ScenarioParseError(f"link: missing field {exc.args[0]!r}") from None
    pos = raw.get("ue_position_m")
    if not isinstance(pos, (list, tuple)) or len(pos) != 2:
        raise ScenarioParseError(f"link {lid}: ue_position_m must be [x, y]")
    snr = raw.get("snr_db")
    return Link(
        id=lid,
        owner=owner,
        node=node,
        ue_position_m=(float(pos[0]), float(pos[1])),
        snr_db=None if snr is None else float(snr),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a mapping")
    for section in ("services", "mnos", "nodes", "links", "band"):
        if section not in doc:
            raise ScenarioParseError(f"missing section {section!r}")
    band_raw = doc["band"]
    ssg = {
        int(sid): frozenset(int(m) for m in members)
        for sid, members in (band_raw.get("ssg") or {}).items()
    }
    band = BandPlan(
        unlicensed_bandwidth_hz=_num(band_raw, "unlicensed_bandwidth_hz", "band"),
        carrier_frequency_ghz=float(band_raw.get("carrier_frequency_ghz", 5.5)),
        ssg=ssg,
    )
    return Scenario(
        services=tuple(_service_from_dict(s) for s in doc["services"]),
        mnos=tuple(_mno_from_dict(m) for m in doc["mnos"]),
        nodes=tuple(_node_from_dict(n) for n in doc["nodes"]),
        links=tuple(_link_from_dict(l) for l in doc["links"]),
        band=band,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    """Inverse of ``scenario_from_dict`` up to unit normalization."""
    doc: dict = {
        "services": [
            {
                "id": s.id,
                "min_throughput_bps": s.min_throughput_bps,
                "price_per_bit": s.price_per_bit,
            }
            for s in sc.services
        ],
        "mnos": [],
        "nodes": [],
        "links": [],
        "band": {
            "unlicensed_bandwidth_hz": sc.band.unlicensed_bandwidth_hz,
            "carrier_frequency_ghz": sc.band.carrier_frequency_ghz,
        },
    }
    if sc.band.ssg:
        doc["band"]["ssg"] = {sid: sorted(members) for sid, members in sc.band.ssg.items()}
    for m in sc.mnos:
        entry: dict = {"id": m.id, "licensed_bandwidth_hz": m.licensed_bandwidth_hz}
        sids = sorted(set(m.min_throughput_overrides_bps) | set(m.price_overrides_per_bit))
        if sids:
            entry["overrides"] = []
            for sid in sids:
                ov: dict = {"service": sid}
                if sid in m.min_throughput_overrides_bps:
                    ov["min_throughput_bps"] = m.min_throughput_overrides_bps[sid]
                if sid in m.price_overrides_per_bit:
                    ov["price_per_bit"] = m.price_overrides_per_bit[sid]
                entry["overrides"].append(ov)
        doc["mnos"].append(entry)
    for n in sc.nodes:
        entry = {
            "id": n.id,
            "kind": n.kind,
            "position_m": list(n.position_m),
            "tx_power_dbm": n.tx_power_dbm,
            "cca_threshold_dbm": n.cca_threshold_dbm,
            "noise_floor_dbm": n.noise_floor_dbm,
            "difs_s": n.difs_s,
            "cw_min": n.cw_min,
            "cw_max": n.cw_max,
            "txop_s": n.txop_s,
        }
        if n.owner is not None:
            entry["owner"] = n.owner
        doc["nodes"].append(entry)
    for l in sc.links:
        entry = {
            "id": l.id,
            "owner": l.owner,
            "node": l.node,
            "ue_position_m": list(l.ue_position_m),
        }
        if l.snr_db is not None:
            entry["snr_db"] = l.snr_db
        doc["links"].append(entry)
    return doc


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file.

    Raises ``ScenarioParseError`` for malformed files and
    ``ScenarioValidationError`` (naming the invariant) for
    structurally invalid ones.
    """
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False))
