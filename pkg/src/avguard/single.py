"""Single-vehicle optical-attack detection and identification.

Detection compares two disparity maps registered to a common reference
camera: a pixel is inconsistent when the absolute gap exceeds 3 px AND the
relative gap exceeds 5% of the smaller value. The disparity error E of a
map pair is the inconsistent fraction of jointly-valid pixels, and an
attack is declared when E strictly exceeds a threshold calibrated on
attack-free samples at a designated false alarm rate r.

Identification generalizes this to one LiDAR plus n cameras: the observed
exceedance bit of every sensor triple equals the OR of the three hidden
per-sensor attack bits, which lets up to n-2 compromised sensors be decoded
from the C(n,2) reference-pinned bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DisparityMap, depth_to_disparity
from .errors import CalibrationError, ConfigError, DomainError, InsufficientOverlapError

ABS_GAP_PX = 3.0
REL_GAP = 0.05


# ---------------------------------------------------------------------------
# state vectors


@dataclass(frozen=True)
class SensorStateVector:
    """Hidden per-sensor attack bits s_0..s_n (1 = attacked)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(bool(b)) for b in self.bits))

    @staticmethod
    def clean(n_sensors: int) -> "SensorStateVector":
        return SensorStateVector((0,) * n_sensors)

    @staticmethod
    def from_attacked(n_sensors: int, attacked) -> "SensorStateVector":
        attacked = set(attacked)
        return SensorStateVector(tuple(1 if i in attacked else 0 for i in range(n_sensors)))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i: int) -> int:
        return self.bits[i]

    @property
    def attacked(self) -> frozenset[int]:
        return frozenset(i for i, b in enumerate(self.bits) if b)

    def popcount(self) -> int:
        return sum(self.bits)

    def with_bit(self, i: int) -> "SensorStateVector":
        bits = list(self.bits)
        bits[i] = 1
        return SensorStateVector(tuple(bits))

    def restrict(self, sensors) -> "SensorStateVector":
        return SensorStateVector(tuple(self.bits[i] for i in sensors))


def pair_order(n_sensors: int) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j over the non-reference sensors, reference pinned last.

    This is the bit layout of :class:`ErrorStateVector`: lexicographic over
    the first n_sensors-1 indices.
    """
    return list(itertools.combinations(range(n_sensors - 1), 2))


@dataclass(frozen=True)
class ErrorStateVector:
    """Observed threshold-exceedance bits e_(i,j,ref) in `pair_order` layout."""

    bits: tuple[int, ...]
    n_sensors: int

    def __post_init__(self):
        expected = math.comb(self.n_sensors - 1, 2)
        if len(self.bits) != expected:
            raise DomainError(
                f"error state vector for {self.n_sensors} sensors needs {expected} bits, got {len(self.bits)}")
        object.__setattr__(self, "bits", tuple(int(bool(b)) for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def bit(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return self.bits[pair_order(self.n_sensors).index((i, j))]

    def all_zero(self) -> bool:
        return not any(self.bits)

    def all_one(self) -> bool:
        return all(self.bits)


def predict_error_state(s: SensorStateVector | tuple | list) -> ErrorStateVector:
    """Forward OR-model: e_(i,j,ref) = s_i | s_j | s_ref with ref the last sensor."""
    bits = tuple(int(b) for b in (s.bits if isinstance(s, SensorStateVector) else s))
    n = len(bits)
    if n < 4:
        raise DomainError(f"need at least 4 sensors, got {n}")
    ref = bits[-1]
    e = tuple(bits[i] | bits[j] | ref for i, j in pair_order(n))
    return ErrorStateVector(e, n)


# ---------------------------------------------------------------------------
# pixel-level comparison


def pixel_inconsistent(a: float, b: float) -> bool:
    """True when two disparity estimates for one pixel disagree.

    Both the absolute (3 px) and relative (5% of the smaller value) gaps
    must be exceeded.
    """
    if a <= 0 or b <= 0 or not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError(f"disparities must be positive and finite, got {a}, {b}")
    gap = abs(a - b)
    return gap > ABS_GAP_PX and gap / min(a, b) > REL_GAP


def disparity_error(dm_a: DisparityMap, dm_b: DisparityMap) -> float:
    """Fraction of jointly-valid pixels that are pixel-inconsistent."""
    if dm_a.values.shape != dm_b.values.shape:
        raise DomainError(
            f"disparity maps differ in shape: {dm_a.values.shape} vs {dm_b.values.shape}")
    joint = dm_a.valid & dm_b.valid
    n = int(joint.sum())
    if n == 0:
        raise InsufficientOverlapError("no jointly-valid pixels to compare")
    a = dm_a.values[joint]
    b = dm_b.values[joint]
    gap = np.abs(a - b)
    bad = (gap > ABS_GAP_PX) & (gap > REL_GAP * np.minimum(a, b))
    return float(bad.sum()) / n


# ---------------------------------------------------------------------------
# threshold calibration


def exceedance_threshold(samples, r: float) -> float:
    """Smallest sample value whose strict-exceedance fraction is <= r.

    With r = 0 this is the sample maximum. The number of samples strictly
    above the returned value is floor(r * N) (ties collapse onto the
    threshold and only lower it).
    """
    a = np.sort(np.asarray(samples, dtype=np.float64))
    n = a.size
    if n == 0:
        raise CalibrationError("cannot calibrate a threshold from zero samples")
    if not (0.0 <= r <= 1.0):
        raise CalibrationError(f"false alarm rate must be in [0, 1], got {r}")
    # exactly floor(r*n) samples may sit strictly above the threshold; any
    # smaller sample value would have at least floor(r*n)+1 > r*n above it
    k = int(math.floor(r * n + 1e-9))
    return float(a[max(0, n - 1 - k)])


@dataclass
class ThresholdTable:
    """Per-triple disparity-error thresholds with calibration metadata.

    Keys are sensor triples (i, j, k), i < j < k, where k is the reference
    sensor of the comparison.
    """

    thresholds: dict[tuple[int, int, int], float]
    r: float
    sample_counts: dict[tuple[int, int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        for triple, theta in self.thresholds.items():
            i, j, k = triple
            if not (i < j < k):
                raise DomainError(f"triple {triple} must be strictly increasing")
            if not (0.0 <= theta <= 1.0):
                raise DomainError(f"threshold for {triple} must be in [0, 1], got {theta}")

    def theta(self, i: int, j: int, k: int) -> float:
        key = tuple(sorted((i, j, k)))
        try:
            return self.thresholds[key]
        except KeyError:
            raise ConfigError(f"threshold table has no entry for sensor triple {key}") from None

    def covers(self, n_sensors: int) -> bool:
        """True if every reference-pinned triple of every recursion level is present."""
        for ref in range(3, n_sensors):
            for i, j in itertools.combinations(range(ref), 2):
                if (i, j, ref) not in self.thresholds:
                    return False
        return True

    def __eq__(self, other):
        if not isinstance(other, ThresholdTable):
            return NotImplemented
        return (self.thresholds == other.thresholds and self.r == other.r
                and self.sample_counts == other.sample_counts)


def calibrate_thresholds(samples: dict[tuple[int, int, int], list], r: float) -> ThresholdTable:
    """Threshold per sensor triple from attack-free disparity-error samples."""
    thresholds = {}
    counts = {}
    for triple, vals in samples.items():
        vals = np.asarray(vals, dtype=np.float64)
        if vals.size == 0:
            raise CalibrationError(f"no samples for triple {triple}")
        thresholds[tuple(triple)] = exceedance_threshold(vals, r)
        counts[tuple(triple)] = int(vals.size)
    return ThresholdTable(thresholds, r, counts)


def detect_attack(E: float, theta: float) -> bool:
    """Strict exceedance test: attack declared iff E > theta."""
    return E > theta


# ---------------------------------------------------------------------------
# frame-level error state


def project_lidar_map(cloud: np.ndarray, camera, camera_position: np.ndarray,
                      baseline: float, max_range: float = 120.0) -> DisparityMap:
    """Sparse disparity map from a point cloud seen by the reference camera.

    Each point's forward distance becomes a disparity at the given baseline;
    when several points fall on one pixel the nearest wins.
    """
    h, w = camera.image_height, camera.image_width
    values = np.zeros((h, w))
    valid = np.zeros((h, w), bool)
    if len(cloud) == 0:
        return DisparityMap(values, valid)
    u, v, z = camera.project(camera_position, camera_position[2], cloud)
    ok = (z > 0.0) & (z <= max_range)
    ui = np.floor(u[ok]).astype(np.int64)
    vi = np.floor(v[ok]).astype(np.int64)
    zk = z[ok]
    inside = (ui >= 0) & (ui < w) & (vi >= 0) & (vi < h)
    ui, vi, zk = ui[inside], vi[inside], zk[inside]
    # z-buffer: visit farthest first so the nearest point lands last
    order = np.argsort(-zk, kind="stable")
    ui, vi, zk = ui[order], vi[order], zk[order]
    values[vi, ui] = camera.focal_length * baseline / zk
    valid[vi, ui] = True
    return DisparityMap(values, valid)


def registered_maps(frame) -> dict[int, DisparityMap]:
    """All per-sensor disparity maps of a frame on one common baseline.

    Camera maps are rescaled from their own pair baseline to the rig's
    reference baseline; a LiDAR cloud is projected into the reference
    camera directly at that baseline. Keys are sensor indices.
    """
    rig = frame.rig
    ref = rig.reference_index
    b_ref = rig.reference_baseline
    maps: dict[int, DisparityMap] = {}
    for i, dm in frame.stereo_maps.items():
        b_pair = rig.baseline(i, ref)
        maps[i] = dm if b_pair == b_ref else dm.scaled(b_ref / b_pair)
    if rig.lidar is not None:
        cam = rig.camera_of(ref)
        maps[0] = project_lidar_map(frame.lidar_cloud, cam, rig.camera_position(ref),
                                    b_ref, rig.lidar.max_range)
    return maps


def pairwise_disparity_errors(frame) -> dict[tuple[int, int, int], float]:
    """Disparity error E for every sensor pair against the frame's reference."""
    rig = frame.rig
    ref = rig.reference_index
    maps = registered_maps(frame)
    errors = {}
    for i, j in itertools.combinations(sorted(maps), 2):
        errors[(i, j, ref)] = disparity_error(maps[i], maps[j])
    return errors


def compute_error_state_vector(frame, thresholds: ThresholdTable) -> ErrorStateVector:
    """Threshold every pair's disparity error into the exceedance bit vector."""
    rig = frame.rig
    n = rig.n_sensors
    if n < 3:
        raise ConfigError("error state needs at least 3 sensors")
    errors = pairwise_disparity_errors(frame)
    ref = rig.reference_index
    bits = tuple(int(detect_attack(errors[(i, j, ref)], thresholds.theta(i, j, ref)))
                 for i, j in pair_order(n))
    return ErrorStateVector(bits, n)


# ---------------------------------------------------------------------------
# identification


@dataclass(frozen=True)
class IdentificationResult:
    """Decoded attacked set; `inconclusive` marks an unresolvable remainder.

    `inconclusive` is True only when the decoding bottomed out at four
    sensors with the exceedance bits still all ones: the reference of that
    stage is attacked for sure, but the remaining three sensors cannot be
    separated without the caller's at-most-(n-2)-attacked guarantee.
    """

    attacked: frozenset[int]
    inconclusive: bool = False


def _decode_mixed(e: ErrorStateVector, active: list[int]) -> frozenset[int]:
    """Read attacked sensors off a bit vector that has at least one zero."""
    m = len(active) - 1  # non-reference count
    pairs = pair_order(len(active))
    bit = dict(zip(pairs, e.bits))
    zero_pair = next(p for p in pairs if bit[p] == 0)
    i0, j0 = zero_pair
    attacked = set()
    for i in range(m):
        if i == i0 or i == j0:
            continue
        k1, k2 = min(i, i0), max(i, i0)
        if bit[(k1, k2)]:
            attacked.add(active[i])
    return frozenset(attacked)


def identify_attacked(e: ErrorStateVector, recompute=None) -> IdentificationResult:
    """Decode the attacked-sensor set from exceedance bits.

    `recompute(active_sensors)` must return the ErrorStateVector measured on
    the reduced rig (reference = last element of `active_sensors`); it is
    only consulted when the current bits are all ones on a rig with more
    than four sensors. Decoding is exact whenever at most n-2 of the n+1
    sensors are attacked.
    """
    active = list(range(e.n_sensors))
    attacked: set[int] = set()
    current = e
    while True:
        if current.n_sensors != len(active):
            raise ConfigError(
                f"error state covers {current.n_sensors} sensors, expected {len(active)}")
        if current.all_zero():
            return IdentificationResult(frozenset(attacked), False)
        if not current.all_one():
            return IdentificationResult(frozenset(attacked) | _decode_mixed(current, active), False)
        # all ones: the reference of this stage is attacked
        attacked.add(active[-1])
        if len(active) == 4:
            return IdentificationResult(frozenset(attacked), True)
        active = active[:-1]
        if recompute is None:
            raise ConfigError(
                "all exceedance bits are set on a rig with more than 4 sensors; "
                "a recompute callback is required to re-measure the reduced rig")
        current = recompute(tuple(active))


def identify_attacked_frame(frame, thresholds: ThresholdTable,
                            reduced_frame_factory=None) -> IdentificationResult:
    """Frame-level identification.

    For rigs with more than four sensors, `reduced_frame_factory(sensors)`
    must return a frame re-measured with only those sensors (the last one
    becomes the reference); four-sensor rigs never need it.
    """
    e = compute_error_state_vector(frame, thresholds)
    recompute = None
    if reduced_frame_factory is not None:
        def recompute(active):
            return compute_error_state_vector(reduced_frame_factory(active), thresholds)
    return identify_attacked(e, recompute)


@dataclass
class DetectionReport:
    """Per-frame detection outcome.

    `errors` maps (i, j, ref) to the measured disparity error; `detections`
    holds the corresponding strict-exceedance booleans.
    """

    errors: dict[tuple[int, int, int], float]
    detections: dict[tuple[int, int, int], bool]
    identified: frozenset[int] = frozenset()
    inconclusive: bool = False
    truth: SensorStateVector | None = None

    @property
    def any_detection(self) -> bool:
        return any(self.detections.values())


def detection_report(frame, thresholds: ThresholdTable, identify: bool = False) -> DetectionReport:
    errors = pairwise_disparity_errors(frame)
    detections = {t: detect_attack(E, thresholds.theta(*t)) for t, E in errors.items()}
    identified: frozenset[int] = frozenset()
    inconclusive = False
    if identify:
        res = identify_attacked(compute_error_state_vector(frame, thresholds))
        identified, inconclusive = res.attacked, res.inconclusive
    truth = getattr(frame, "attack_truth", None)
    return DetectionReport(errors, detections, identified, inconclusive, truth)
