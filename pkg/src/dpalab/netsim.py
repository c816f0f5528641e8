"""TTI-level multi-user network emulation.

Per TTI: generate traffic, group users into angular sectors, run a
proportional-fair scheduler, compute per-user capacity from the active
front-end's gain pattern over a synthetic LOS channel, drain FIFO queues,
and drop packets past their latency bound.

Traffic is a periodic frame-burst process (VR-style): each user emits a
frame of demand_bps / frame_rate bits at a fixed cadence with a
deterministic seeded phase offset.  Burst collisions between users are
what separate the architectures: a delay-phased front-end serves
colliding bursts in parallel at full array gain, TDMA serializes them,
a split array serves them in parallel at reduced gain, and a fixed
rainbow mapping caps each direction at a narrow frequency slice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from dpalab.core import ArrayConfig, gain_at
from dpalab.closedform import generalized_weights
from dpalab.fsda import BeamPlan, BeamSpec
from dpalab.baselines import (
    Architecture,
    ArchKind,
    phased_array_weights,
    split_array_weights,
    ttd_rainbow_weights,
)

FOV_DEGREES = 120.0

# Per-stream PHY rate cap: the Shannon rate of a full-band beam at the
# reference SNR exceeds what a single modulation stream can carry, so one
# user on the whole band wastes capacity while parallel beams do not.
PHY_CAP_BPS = 2.2e9

PF_EMA_ALPHA = 0.1
PF_FRACTION_FLOOR = 0.05
FREQ_SAMPLES_PER_BEAM = 8


@dataclass
class UserSpec:
    """One traffic sink/source at a fixed direction."""

    user_id: int
    sin_theta: float
    demand_bps: float = 60e6
    latency_bound_s: float = 1e-3
    packet_size_bits: int = 12000

    def __post_init__(self):
        if self.demand_bps <= 0:
            raise ValueError("demand_bps must be positive")
        if self.latency_bound_s <= 0:
            raise ValueError("latency_bound_s must be positive")
        if self.packet_size_bits <= 0:
            raise ValueError("packet_size_bits must be positive")


@dataclass
class Packet:
    owner: int
    size_bits: int
    created_at: int
    delivered_at: int | None = None
    dropped: bool = False
    remaining_bits: int = field(default=-1)

    def __post_init__(self):
        if self.remaining_bits < 0:
            self.remaining_bits = self.size_bits


@dataclass
class EmulationScenario:
    """Everything needed for one deterministic emulation run."""

    users: list[UserSpec]
    architecture: Architecture
    num_ttis: int = 2000
    tti_duration_s: float = 125e-6
    fov_groups: int = 10
    reference_snr_db: float = 25.0
    rng_seed: int = 0
    frame_rate_hz: float = 100.0
    config: ArrayConfig = field(default_factory=ArrayConfig)

    def __post_init__(self):
        if self.num_ttis < 1:
            raise ValueError("num_ttis must be >= 1")
        if self.fov_groups < 1:
            raise ValueError("fov_groups must be >= 1")

    @property
    def frame_interval_ttis(self) -> int:
        return max(1, int(round(1.0 / (self.frame_rate_hz * self.tti_duration_s))))

    def to_json(self) -> str:
        return json.dumps(
            {
                "architecture": self.architecture.kind.value,
                "splits": self.architecture.splits,
                "num_ttis": self.num_ttis,
                "tti_duration_s": self.tti_duration_s,
                "fov_groups": self.fov_groups,
                "reference_snr_db": self.reference_snr_db,
                "rng_seed": self.rng_seed,
                "frame_rate_hz": self.frame_rate_hz,
                "users": [
                    {
                        "user_id": u.user_id,
                        "sin_theta": u.sin_theta,
                        "demand_bps": u.demand_bps,
                        "latency_bound_s": u.latency_bound_s,
                        "packet_size_bits": u.packet_size_bits,
                    }
                    for u in self.users
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str, architecture: Architecture | None = None) -> "EmulationScenario":
        data = json.loads(text)
        users = [
            UserSpec(
                user_id=u["user_id"],
                sin_theta=u["sin_theta"],
                demand_bps=u.get("demand_bps", 60e6),
                latency_bound_s=u.get("latency_bound_s", 1e-3),
                packet_size_bits=u.get("packet_size_bits", 12000),
            )
            for u in data["users"]
        ]
        if architecture is None:
            architecture = Architecture(ArchKind(data["architecture"]),
                                        splits=data.get("splits"))
        return cls(
            users=users,
            architecture=architecture,
            num_ttis=data.get("num_ttis", 2000),
            tti_duration_s=data.get("tti_duration_s", 125e-6),
            fov_groups=data.get("fov_groups", 10),
            reference_snr_db=data.get("reference_snr_db", 25.0),
            rng_seed=data.get("rng_seed", 0),
            frame_rate_hz=data.get("frame_rate_hz", 100.0),
        )


@dataclass
class UserMetrics:
    generated_packets: int = 0
    delivered_packets: int = 0
    dropped_packets: int = 0
    generated_bits: int = 0
    delivered_bits: int = 0
    latencies_s: list = field(default_factory=list)


@dataclass
class MetricsReport:
    """Per-user and aggregate latency / loss / throughput results.

    `timeseries` rows are (tti, user_id, queued_bits, delivered_bits,
    dropped_packets) sampled at the end of each TTI.
    """

    per_user: dict
    duration_s: float
    timeseries: list = field(default_factory=list)

    def _latencies(self, user_id=None):
        if user_id is not None:
            return np.asarray(self.per_user[user_id].latencies_s)
        out = []
        for m in self.per_user.values():
            out.extend(m.latencies_s)
        return np.asarray(out)

    def packet_loss_fraction(self, user_id=None) -> float:
        users = [self.per_user[user_id]] if user_id is not None else self.per_user.values()
        gen = sum(m.generated_packets for m in users)
        drop = sum(m.dropped_packets for m in users)
        return drop / gen if gen else 0.0

    def throughput_bps(self, user_id=None) -> float:
        users = [self.per_user[user_id]] if user_id is not None else self.per_user.values()
        return sum(m.delivered_bits for m in users) / self.duration_s

    def latency_stats_s(self, user_id=None):
        """(median, p99, worst) over delivered packets, or Nones if empty."""
        lat = self._latencies(user_id)
        if lat.size == 0:
            return (None, None, None)
        return (
            float(np.median(lat)),
            float(np.percentile(lat, 99)),
            float(np.max(lat)),
        )

    def to_dict(self) -> dict:
        med, p99, worst = self.latency_stats_s()
        return {
            "aggregate": {
                "packet_loss_fraction": self.packet_loss_fraction(),
                "throughput_bps": self.throughput_bps(),
                "latency_median_s": med,
                "latency_p99_s": p99,
                "latency_worst_s": worst,
            },
            "per_user": {
                uid: {
                    "packet_loss_fraction": self.packet_loss_fraction(uid),
                    "throughput_bps": self.throughput_bps(uid),
                    "latency_worst_s": self.latency_stats_s(uid)[2],
                    "generated_packets": m.generated_packets,
                    "delivered_packets": m.delivered_packets,
                    "dropped_packets": m.dropped_packets,
                }
                for uid, m in self.per_user.items()
            },
        }


def sector_centers_sin(fov_groups: int = 10) -> np.ndarray:
    """sin(theta) of each sector center across the field of view."""
    width = FOV_DEGREES / fov_groups
    degs = -FOV_DEGREES / 2.0 + width * (np.arange(fov_groups) + 0.5)
    return np.sin(np.deg2rad(degs))


def group_users(users, fov_groups: int = 10) -> dict:
    """Map each user to the angular sector containing its direction."""
    half = np.sin(np.deg2rad(FOV_DEGREES / 2.0))
    width = FOV_DEGREES / fov_groups
    groups: dict = {}
    for user in users:
        if abs(user.sin_theta) > half + 1e-12:
            raise ValueError("user direction outside the field of view")
        deg = math.degrees(math.asin(user.sin_theta))
        idx = min(int((deg + FOV_DEGREES / 2.0) / width), fov_groups - 1)
        groups.setdefault(idx, []).append(user)
    return groups


def table_one_scenario(architecture: Architecture, rng_seed: int = 0,
                       demand_bps: float = 60e6) -> EmulationScenario:
    """Canonical 10-user scenario: 60 Mbps each, 1 ms bound, one user per
    12-degree sector.

    Frame phases put five users (alternating sectors) in one burst cluster
    and spread the other five evenly, exercising both the collision and
    the isolated-burst regimes.
    """
    centers = sector_centers_sin(10)
    users = [UserSpec(user_id=i, sin_theta=float(centers[i]), demand_bps=demand_bps)
             for i in range(10)]
    return EmulationScenario(users=users, architecture=architecture, rng_seed=rng_seed)


def _frame_offsets(scenario: EmulationScenario) -> dict:
    """Deterministic per-user frame phase offsets in TTIs.

    Users at alternating directions form one synchronized burst cluster
    (well-separated beams bursting together); the rest are spread across
    the frame interval.  The seed rotates the spread order, so runs are
    reproducible per seed without changing the collision structure.
    """
    interval = scenario.frame_interval_ttis
    rng = np.random.default_rng(scenario.rng_seed)
    by_angle = sorted(scenario.users, key=lambda u: u.sin_theta)
    cluster = by_angle[::3]
    spread = [u for u in by_angle if u not in cluster]
    if spread:
        rot = int(rng.integers(len(spread)))
        spread = spread[rot:] + spread[:rot]
    offsets = {}
    for user in cluster:
        offsets[user.user_id] = interval // 8
    for i, user in enumerate(spread):
        off = interval // 4 + (i * (3 * interval // 4)) // max(1, len(spread))
        offsets[user.user_id] = off % interval
    return offsets


def generate_traffic(scenario: EmulationScenario, tti: int,
                     offsets: dict | None = None) -> list:
    """Packets created at this TTI under the periodic frame-burst model."""
    if offsets is None:
        offsets = _frame_offsets(scenario)
    interval = scenario.frame_interval_ttis
    packets = []
    for user in scenario.users:
        if (tti - offsets[user.user_id]) % interval != 0:
            continue
        frame_bits = int(round(user.demand_bps / scenario.frame_rate_hz))
        size = user.packet_size_bits
        full, rem = divmod(frame_bits, size)
        for _ in range(full):
            packets.append(Packet(user.user_id, size, tti))
        if rem:
            packets.append(Packet(user.user_id, rem, tti))
    return packets


def pf_schedule(backlogs: dict, rates: dict, ema: dict, max_beams: int) -> dict:
    """Proportional-fair pick of up to max_beams backlogged groups.

    Groups are ranked by achievable_rate / smoothed_throughput; the
    selected groups split the band proportionally to their backlogs with
    a per-group floor.  Returns {group: subcarrier fraction}, summing to 1
    when any group is backlogged.
    """
    active = [g for g, b in backlogs.items() if b > 0]
    if not active:
        return {}
    active.sort(key=lambda g: rates[g] / max(ema.get(g, 0.0), 1.0), reverse=True)
    chosen = active[:max_beams]
    total = sum(backlogs[g] for g in chosen)
    fractions = {g: max(backlogs[g] / total, PF_FRACTION_FLOOR) for g in chosen}
    norm = sum(fractions.values())
    return {g: f / norm for g, f in fractions.items()}


def _shannon_bits(bandwidth_hz: float, snr_db: np.ndarray, tti_s: float) -> float:
    rate = bandwidth_hz * float(np.mean(np.log2(1.0 + 10.0 ** (np.asarray(snr_db) / 10.0))))
    return min(rate, PHY_CAP_BPS) * tti_s


def capacity(scenario: EmulationScenario, allocation: dict, group_dirs: dict) -> dict:
    """Bits deliverable per group this TTI for the scenario's front-end.

    allocation maps group -> subcarrier fraction; group_dirs maps
    group -> sin(theta) of its representative direction.  SNR is the
    reference value adjusted by the realized beamforming gain relative to
    the full-array peak.
    """
    cfg = scenario.config
    arch = scenario.architecture.kind
    B = cfg.bandwidth_hz
    tti = scenario.tti_duration_s
    ref = scenario.reference_snr_db
    N = cfg.num_antennas
    out = {}

    if arch == ArchKind.TTD_RAINBOW:
        # Fixed prism: each direction owns the slice of frequencies whose
        # rainbow pointing falls in its sector, regardless of demand.
        w = ttd_rainbow_weights(N, B)
        slice_bw = B / scenario.fov_groups
        for g, s in group_dirs.items():
            center = np.clip(s * B / 2.0, -B / 2 + slice_bw / 2, B / 2 - slice_bw / 2)
            f = np.linspace(center - slice_bw / 2, center + slice_bw / 2,
                            FREQ_SAMPLES_PER_BEAM)
            gain = np.abs(gain_at(w, f, np.full(f.size, s), cfg))
            snr = ref + 20.0 * np.log10(np.maximum(gain, 1e-12) / N)
            out[g] = _shannon_bits(slice_bw, snr, tti)
        return out

    if not allocation:
        return out

    if arch == ArchKind.PHASED_TDMA:
        (g, frac), = allocation.items()
        w = phased_array_weights(group_dirs[g], N)
        f = np.linspace(-B / 2, B / 2, FREQ_SAMPLES_PER_BEAM, endpoint=False)
        gain = np.abs(gain_at(w, f, np.full(f.size, group_dirs[g]), cfg))
        snr = ref + 20.0 * np.log10(np.maximum(gain, 1e-12) / N)
        out[g] = _shannon_bits(frac * B, snr, tti)
        return out

    groups = sorted(allocation, key=lambda g: group_dirs[g])
    fracs = np.array([allocation[g] for g in groups])
    fracs = fracs / fracs.sum()
    edges = -B / 2 + B * np.concatenate([[0.0], np.cumsum(fracs)])

    if arch == ArchKind.DPA:
        plan = BeamPlan(
            [BeamSpec(group_dirs[g], edges[i], edges[i + 1])
             for i, g in enumerate(groups)],
            bandwidth_hz=B,
        )
        w = generalized_weights(plan, B, N)
    elif arch == ArchKind.SPLIT_ANTENNA:
        w = split_array_weights([group_dirs[g] for g in groups], N)
    else:
        raise ValueError("oracle has no emulation front-end")

    for i, g in enumerate(groups):
        pad = (edges[i + 1] - edges[i]) / (2 * FREQ_SAMPLES_PER_BEAM)
        f = np.linspace(edges[i] + pad, edges[i + 1] - pad, FREQ_SAMPLES_PER_BEAM)
        gain = np.abs(gain_at(w, f, np.full(f.size, group_dirs[g]), cfg))
        snr = ref + 20.0 * np.log10(np.maximum(gain, 1e-12) / N)
        out[g] = _shannon_bits(fracs[i] * B, snr, tti)
    return out


def _max_beams(arch: ArchKind) -> int:
    if arch == ArchKind.PHASED_TDMA:
        return 1
    return 8


def run_emulation(scenario: EmulationScenario,
                  record_timeseries: bool = False) -> MetricsReport:
    """Run the full TTI loop and collect per-user metrics.

    Queues are per-user FIFO; a packet not fully delivered within its
    latency bound is dropped and counted as lost.  Deterministic for a
    fixed scenario and seed.  With record_timeseries, the report carries
    per-TTI per-user (queued_bits, delivered_bits, dropped_packets) rows.
    """
    arch = scenario.architecture.kind
    groups = group_users(scenario.users, scenario.fov_groups)
    group_dirs = {
        g: float(np.mean([u.sin_theta for u in members]))
        for g, members in groups.items()
    }
    user_group = {u.user_id: g for g, members in groups.items() for u in members}
    offsets = _frame_offsets(scenario)

    queues: dict = {u.user_id: [] for u in scenario.users}
    metrics = {u.user_id: UserMetrics() for u in scenario.users}
    bounds = {
        u.user_id: max(1, int(round(u.latency_bound_s / scenario.tti_duration_s)))
        for u in scenario.users
    }
    ema = {g: 1.0 for g in groups}
    # Achievable full-allocation rate per group for the PF metric; the
    # exact value only matters relatively, so the reference rate is fine.
    ref_rate = {g: 1.0 for g in groups}
    timeseries: list = []

    for tti in range(scenario.num_ttis):
        dropped_now = {u.user_id: 0 for u in scenario.users}
        served_now = {u.user_id: 0 for u in scenario.users}
        for pkt in generate_traffic(scenario, tti, offsets):
            queues[pkt.owner].append(pkt)
            metrics[pkt.owner].generated_packets += 1
            metrics[pkt.owner].generated_bits += pkt.size_bits

        # Deadline enforcement happens before service: a packet has
        # exactly latency_bound worth of TTIs of service opportunity.
        for uid, queue in queues.items():
            kept = []
            for pkt in queue:
                if tti - pkt.created_at >= bounds[uid]:
                    pkt.dropped = True
                    metrics[uid].dropped_packets += 1
                    dropped_now[uid] += 1
                else:
                    kept.append(pkt)
            queues[uid] = kept

        backlogs = {g: 0 for g in groups}
        for uid, queue in queues.items():
            backlogs[user_group[uid]] += sum(p.remaining_bits for p in queue)

        allocation = pf_schedule(backlogs, ref_rate, ema, _max_beams(arch))
        if arch == ArchKind.TTD_RAINBOW:
            allocation = {g: 1.0 / scenario.fov_groups for g, b in backlogs.items() if b > 0}
        if allocation:
            budgets = capacity(scenario, allocation, group_dirs)
        else:
            budgets = {}

        delivered_now = {g: 0 for g in groups}
        for g, budget in budgets.items():
            budget = int(budget)
            # Users inside a group share its budget FIFO by packet age.
            pending = [p for u in groups[g] for p in queues[u.user_id]]
            pending.sort(key=lambda p: (p.created_at, p.owner))
            for pkt in pending:
                if budget <= 0:
                    break
                take = min(budget, pkt.remaining_bits)
                pkt.remaining_bits -= take
                budget -= take
                if pkt.remaining_bits == 0:
                    pkt.delivered_at = tti
                    metrics[pkt.owner].delivered_packets += 1
                    metrics[pkt.owner].delivered_bits += pkt.size_bits
                    metrics[pkt.owner].latencies_s.append(
                        (tti - pkt.created_at + 1) * scenario.tti_duration_s
                    )
                    delivered_now[g] += pkt.size_bits
                    served_now[pkt.owner] += pkt.size_bits
            for uid in (u.user_id for u in groups[g]):
                queues[uid] = [p for p in queues[uid] if p.remaining_bits > 0]

        for g in groups:
            rate = delivered_now[g] / scenario.tti_duration_s
            ema[g] = (1.0 - PF_EMA_ALPHA) * ema[g] + PF_EMA_ALPHA * max(rate, 1.0)

        if record_timeseries:
            for u in scenario.users:
                queued = sum(p.remaining_bits for p in queues[u.user_id])
                timeseries.append(
                    (tti, u.user_id, queued, served_now[u.user_id], dropped_now[u.user_id])
                )

    # Packets still queued at the end are neither delivered nor dropped;
    # conservation is generated = delivered + dropped + queued.
    return MetricsReport(
        per_user=metrics,
        duration_s=scenario.num_ttis * scenario.tti_duration_s,
        timeseries=timeseries,
    )
