"""Instance parsing (VRP-REP-style XML and a plain-text form) and the
distance matrices each pipeline consumes.

Three node-ordering conventions are in play and are easy to confuse, so
every matrix carries its convention as an enum.
"""
from __future__ import annotations

import math
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

# Sentinel used by the open per-cluster matrix to forbid returning to the
# start depot, leaving the end depot, and self-arcs.
OPEN_SENTINEL = 9999999.0


class InstanceError(ValueError):
    """Malformed or incomplete instance data."""


class NodeOrder(Enum):
    FULL = "depot_customers_depot"
    CUSTOMERS = "customers_only"
    CLUSTER_OPEN = "depot_cluster_depot_open"
    CLUSTER_CLOSED = "depot_cluster_closed"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    order: NodeOrder

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, key):
        return self.values[key]


@dataclass(frozen=True)
class Instance:
    """A CVRP problem with a homogeneous fleet."""

    name: str
    demands: tuple[int, ...]
    capacity: int
    num_vehicles: int
    customer_coords: tuple[tuple[float, float], ...]
    depot_coord: tuple[float, float]

    @property
    def num_customers(self) -> int:
        return len(self.demands)

    def __post_init__(self):
        if any(d < 1 for d in self.demands):
            raise InstanceError("all demands must be >= 1 after flooring")
        if sum(self.demands) > self.num_vehicles * self.capacity:
            raise InstanceError(
                f"total demand {sum(self.demands)} exceeds fleet capacity "
                f"{self.num_vehicles} x {self.capacity}"
            )
        if len(self.customer_coords) != len(self.demands):
            raise InstanceError("one coordinate pair required per demand")


def _float(text, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InstanceError(f"non-numeric {what}: {text!r}") from None


def parse_instance_xml(data: bytes | str) -> Instance:
    """Parse a VRP-REP-style instance document.

    Demands are floored to integers, and the fleet's capacity list is
    replicated ceil(total demand / total capacity) times, so the vehicle
    count always covers the demand.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise InstanceError(f"malformed XML: {exc}") from None

    name = root.findtext("info/name", default="").strip()

    requests = root.findall("requests/request")
    if not requests:
        raise InstanceError("instance has no requests")
    demands = [math.floor(_float(r.findtext("quantity"), "request quantity")) for r in requests]

    profiles = root.findall("fleet/vehicle_profile")
    if not profiles:
        raise InstanceError("instance has no vehicle profile with a capacity")
    capacities = []
    departure_node = None
    for prof in profiles:
        cap_text = prof.findtext("capacity")
        if cap_text is None:
            raise InstanceError("vehicle profile is missing a capacity")
        capacities.append(math.floor(_float(cap_text, "vehicle capacity")))
        if departure_node is None:
            departure_node = prof.findtext("departure_node")
    capacities = capacities * math.ceil(sum(demands) / sum(capacities))

    depot = None
    customers = []
    for node in root.findall("network/nodes/node"):
        node_id = node.get("id")
        node_type = node.get("type")
        cx = _float(node.findtext("cx"), f"node {node_id} coordinate")
        cy = _float(node.findtext("cy"), f"node {node_id} coordinate")
        if node_type == "0" or (departure_node is not None and node_id == departure_node):
            depot = (cx, cy)
        elif node_type == "1":
            customers.append((cx, cy))
    if depot is None:
        raise InstanceError("instance has no depot node")

    return Instance(
        name=name,
        demands=tuple(demands),
        capacity=capacities[0],
        num_vehicles=len(capacities),
        customer_coords=tuple(customers),
        depot_coord=depot,
    )


def load_instance_xml(path) -> Instance:
    with open(path, "rb") as fh:
        inst = parse_instance_xml(fh.read())
    if not inst.name:
        inst = replace(inst, name=os.path.splitext(os.path.basename(path))[0])
    return inst


def parse_instance_text(text: str, name: str = "") -> Instance:
    """Plain-text form for synthetic tests:

    line 1: "Q K", line 2: depot "x y", then one "x y demand" per customer.
    """
    lines = [ln for ln in (l.strip() for l in text.splitlines()) if ln]
    if len(lines) < 3:
        raise InstanceError("text instance needs capacity line, depot line, and customers")
    try:
        capacity, k = (int(tok) for tok in lines[0].split())
        dx, dy = (float(tok) for tok in lines[1].split())
    except ValueError:
        raise InstanceError("bad header lines in text instance") from None
    coords = []
    demands = []
    for ln in lines[2:]:
        toks = ln.split()
        if len(toks) != 3:
            raise InstanceError(f"bad customer line: {ln!r}")
        coords.append((float(toks[0]), float(toks[1])))
        demands.append(math.floor(float(toks[2])))
    return Instance(
        name=name,
        demands=tuple(demands),
        capacity=capacity,
        num_vehicles=k,
        customer_coords=tuple(coords),
        depot_coord=(dx, dy),
    )


def load_instance(path) -> Instance:
    path = str(path)
    if path.endswith(".xml"):
        return load_instance_xml(path)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance_text(fh.read(), name=os.path.splitext(os.path.basename(path))[0])


def _euclid(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def full_distance_matrix(inst: Instance) -> DistanceMatrix:
    """Ordering [depot, customers..., depot]; full-precision Euclidean."""
    coords = np.array([inst.depot_coord, *inst.customer_coords, inst.depot_coord])
    return DistanceMatrix(_euclid(coords), NodeOrder.FULL)


def distances_without_depots(m: DistanceMatrix) -> DistanceMatrix:
    if m.order is not NodeOrder.FULL:
        raise InstanceError(f"expected a FULL-ordered matrix, got {m.order}")
    if m.size <= 2:
        raise InstanceError("matrix has no customer block to extract")
    return DistanceMatrix(m.values[1:-1, 1:-1].copy(), NodeOrder.CUSTOMERS)


def cluster_distance_matrix_open(inst: Instance, cluster) -> DistanceMatrix:
    """Ordering [depot, members..., depot], with sentinel entries forbidding
    arcs back to the start depot, out of the end depot, and self-arcs."""
    coords = np.array(
        [inst.depot_coord]
        + [inst.customer_coords[i] for i in cluster]
        + [inst.depot_coord]
    )
    d = _euclid(coords)
    mask = np.zeros_like(d, dtype=bool)
    mask[:, 0] = True
    mask[-1, :] = True
    mask |= d == 0.0
    d[mask] = OPEN_SENTINEL
    return DistanceMatrix(d, NodeOrder.CLUSTER_OPEN)


def cluster_distance_matrix_closed(inst: Instance, cluster) -> DistanceMatrix:
    """Ordering [depot, members...]; plain Euclidean distances."""
    coords = np.array([inst.depot_coord] + [inst.customer_coords[i] for i in cluster])
    return DistanceMatrix(_euclid(coords), NodeOrder.CLUSTER_CLOSED)
