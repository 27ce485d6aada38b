"""Random network generation and experiment configuration.

Nodes are placed uniformly in a square of area 100*K km^2 around a central
access point, route to the closest node that is closer to the access point,
and see Rayleigh-faded amplitude gains with mean 0.3 / d^2 (d in km).
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# sentinel next-hop value for the access point (it never transmits)
ACCESS_POINT = -1

# reject placements closer than 1 m to another node or the access point
MIN_SEPARATION_KM = 1e-3

RAYLEIGH_MEAN_COEFF = 0.3  # mean amplitude gain at 1 km


@dataclass
class GameConfig:
    """Static game parameters (the physical world lives in Scenario)."""
    K: int                         # number of users
    N: int = 32                    # processing gain, chips per bit
    L: int = 100                   # information bits per packet
    M: int = 100                   # total bits per packet
    R: float = 1e5                 # transmission rate, bits/s
    q: float | np.ndarray = 0.01   # receiver operating power, Watts
    p_max: float = 100.0           # maximum transmit power, Watts
    efficiency_exponent: float | None = None   # defaults to M
    q_by_receiver: dict | None = None  # optional per-receiver q vectors

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("need at least one user")
        if self.N < 1:
            raise ValueError("processing gain must be >= 1")
        if self.L > self.M:
            raise ValueError("information bits cannot exceed packet bits")
        if self.p_max <= 0:
            raise ValueError("maximum power must be positive")
        self.q = np.broadcast_to(
            np.asarray(self.q, dtype=np.float64), (self.K,)).copy()
        if np.any(self.q < 0):
            raise ValueError("operating powers must be nonnegative")
        if self.efficiency_exponent is None:
            self.efficiency_exponent = float(self.M)

    def q_for(self, kind):
        """Operating-power vector for a receiver kind (per-receiver q is
        optional; the default configuration uses one q per user)."""
        if self.q_by_receiver is not None and kind in self.q_by_receiver:
            return np.broadcast_to(
                np.asarray(self.q_by_receiver[kind], dtype=np.float64),
                (self.K,))
        return self.q


@dataclass
class Scenario:
    """One realization of the physical network.

    ``gain_table`` holds amplitude gains h_j^(m) with one row per distinct
    receiving node (ordered as in ``receiver_nodes``) and one column per
    transmitter.  Entries where transmitter and receiver coincide are zero
    and never used.
    """
    positions: np.ndarray        # (K, 2), km
    access_point: np.ndarray     # (2,), km
    next_hop: np.ndarray         # (K,) int, ACCESS_POINT or node index
    receiver_nodes: np.ndarray   # sorted distinct next_hop values
    gain_table: np.ndarray       # (len(receiver_nodes), K)
    noise_power: float           # sigma^2, Watts
    seed: int | None = None
    _gain_matrix: np.ndarray | None = field(default=None, init=False,
                                            repr=False)

    @property
    def K(self):
        return len(self.positions)

    def receiver_row(self, node):
        """Row index of receiving node ``node`` in the gain table."""
        idx = np.searchsorted(self.receiver_nodes, node)
        if idx >= len(self.receiver_nodes) or self.receiver_nodes[idx] != node:
            raise KeyError(f"node {node} is not a receiver in this scenario")
        return int(idx)

    def receive_gains(self, k):
        """Amplitude gains from every transmitter to user k's next hop."""
        return self.gain_table[self.receiver_row(int(self.next_hop[k]))]

    def gain_matrix(self):
        """(K, K) matrix with row k = receive_gains(k); cached."""
        if self._gain_matrix is None:
            rows = [self.receiver_row(int(m)) for m in self.next_hop]
            self._gain_matrix = self.gain_table[rows]
        return self._gain_matrix

    def exclusions(self):
        """Per-user receiving-node index to drop from interference sums.

        The access point never transmits, so it needs no exclusion (-1).
        """
        return np.where(self.next_hop >= 0, self.next_hop, -1)

    def hop_distances(self):
        """Length of each user's transmit hop in km."""
        targets = np.where(self.next_hop[:, None] >= 0,
                           self.positions[self.next_hop], self.access_point)
        return np.linalg.norm(self.positions - targets, axis=1)


def square_side(k_users):
    """Side of the placement square in km (area 100*K km^2)."""
    return np.sqrt(100.0 * k_users)


def generate_topology(k_users, seed):
    """Place K nodes uniformly in the square around a central access point.

    Returns (positions, access_point).  Deterministic for a given seed;
    points landing within 1 m of the access point or an earlier node are
    redrawn so distances are never degenerate.
    """
    if k_users < 1:
        raise ValueError("need at least one node")
    rng = np.random.default_rng(seed)
    half = square_side(k_users) / 2.0
    access_point = np.zeros(2)
    positions = np.empty((k_users, 2))
    for k in range(k_users):
        while True:
            pt = rng.uniform(-half, half, size=2)
            d_ap = np.linalg.norm(pt - access_point)
            d_nodes = (np.linalg.norm(positions[:k] - pt, axis=1).min()
                       if k else np.inf)
            if d_ap >= MIN_SEPARATION_KM and d_nodes >= MIN_SEPARATION_KM:
                positions[k] = pt
                break
    return positions, access_point


def compute_routing(positions, access_point):
    """Next-hop map: the closest node that is strictly closer to the access
    point, or the access point itself.

    Ties are broken toward the lower index, with the access point treated
    as index -1 (so it wins exact ties).  The result is acyclic because the
    distance to the access point strictly decreases along every hop.
    """
    positions = np.asarray(positions, dtype=np.float64)
    access_point = np.asarray(access_point, dtype=np.float64)
    d_ap = np.linalg.norm(positions - access_point, axis=1)
    if np.any(d_ap == 0):
        raise ValueError("a node coincides with the access point")
    k_users = len(positions)
    next_hop = np.empty(k_users, dtype=np.int64)
    for k in range(k_users):
        best = (d_ap[k], ACCESS_POINT)
        for j in range(k_users):
            if j != k and d_ap[j] < d_ap[k]:
                cand = (float(np.linalg.norm(positions[j] - positions[k])), j)
                if cand < best:
                    best = cand
        next_hop[k] = best[1]
    return next_hop


def sample_channel_gains(positions, access_point, receiver_nodes, seed):
    """Rayleigh amplitude gains with mean 0.3 / d^2 for every
    (receiving node, transmitter) pair; d is in km.

    Deterministic given (seed, positions).  Raises if a transmitter
    coincides with a receiving node (the mean would be infinite).
    """
    positions = np.asarray(positions, dtype=np.float64)
    access_point = np.asarray(access_point, dtype=np.float64)
    receiver_nodes = np.asarray(receiver_nodes, dtype=np.int64)
    recv_pos = np.where(receiver_nodes[:, None] >= 0,
                        positions[receiver_nodes], access_point)
    dist = np.linalg.norm(recv_pos[:, None, :] - positions[None, :, :],
                          axis=2)
    self_link = receiver_nodes[:, None] == np.arange(len(positions))[None, :]
    if np.any((dist == 0) & ~self_link):
        raise ValueError("transmitter coincides with a receiving node")
    mean = np.zeros_like(dist)
    np.divide(RAYLEIGH_MEAN_COEFF, dist ** 2, out=mean, where=~self_link)
    scale = mean / np.sqrt(np.pi / 2.0)
    rng = np.random.default_rng(seed)
    return rng.rayleigh(scale=scale)


def build_scenario(k_users, seed, noise_power=5e-16):
    """Generate a complete scenario from one integer seed."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    topo_ss, gain_ss = ss.spawn(2)
    positions, access_point = generate_topology(k_users, topo_ss)
    next_hop = compute_routing(positions, access_point)
    receiver_nodes = np.unique(next_hop)
    gain_table = sample_channel_gains(positions, access_point,
                                      receiver_nodes, gain_ss)
    return Scenario(positions=positions, access_point=access_point,
                    next_hop=next_hop, receiver_nodes=receiver_nodes,
                    gain_table=gain_table, noise_power=noise_power,
                    seed=seed if isinstance(seed, int) else None)


def routing_reaches_access_point(next_hop, max_hops=None):
    """Follow every routing chain; True iff all reach the access point
    within K hops (no cycles)."""
    next_hop = np.asarray(next_hop)
    limit = max_hops if max_hops is not None else len(next_hop)
    for start in range(len(next_hop)):
        node, hops = start, 0
        while node != ACCESS_POINT:
            node = int(next_hop[node])
            hops += 1
            if hops > limit:
                return False
    return True


def scenario_to_dict(scenario):
    return {
        "format": "powergame-scenario-v1",
        "seed": scenario.seed,
        "noise_power": scenario.noise_power,
        "access_point": scenario.access_point.tolist(),
        "positions": scenario.positions.tolist(),
        "next_hop": scenario.next_hop.tolist(),
        "receiver_nodes": scenario.receiver_nodes.tolist(),
        "gain_table": scenario.gain_table.tolist(),
    }


def scenario_from_dict(data):
    return Scenario(
        positions=np.array(data["positions"], dtype=np.float64),
        access_point=np.array(data["access_point"], dtype=np.float64),
        next_hop=np.array(data["next_hop"], dtype=np.int64),
        receiver_nodes=np.array(data["receiver_nodes"], dtype=np.int64),
        gain_table=np.array(data["gain_table"], dtype=np.float64),
        noise_power=data["noise_power"],
        seed=data["seed"],
    )


def save_instance(path, scenario, codebook=None):
    """Write scenario (and optionally the codebook) to a JSON file.

    Floats round-trip exactly, so a reloaded instance replays bit-for-bit.
    """
    payload = scenario_to_dict(scenario)
    if codebook is not None:
        payload["codebook"] = {
            "processing_gain": codebook.processing_gain,
            "chips": codebook.chips().tolist(),
        }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_instance(path):
    """Inverse of ``save_instance``; returns (scenario, codebook or None)."""
    from .receivers import CodeBook

    data = json.loads(Path(path).read_text())
    scenario = scenario_from_dict(data)
    codebook = None
    if "codebook" in data:
        codebook = CodeBook.from_chips(np.array(data["codebook"]["chips"]))
    return scenario, codebook
