"""Engine formulas and dataset summary statistics.

Brake power and brake specific fuel consumption follow the standard dyno
relations; summarize() recomputes per-blend maxima and blend-vs-baseline
deltas from the rows of an engine dataset. The headline values reported with
the source experiments (which do not match the bundled table and cannot be
derived from it) are carried along as annotations only, never used in
computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Dataset

#: Headline values reported alongside the source experiments. Not derivable
#: from the bundled table; emitted verbatim as annotations.
REPORTED_VALUES = {
    "max_power_kw": 18.12,
    "max_power_kw_alt": 18.2,
    "max_power_rpm": 3200,
    "max_torque_nm": 64.2,
    "max_torque_rpm": 2400,
    "b20_power_delta_pct": 2.7,
    "b20_torque_delta_pct": 2.9,
}


class MetricsError(ValueError):
    """Invalid argument to an engine formula or summary."""


def brake_power(n: float, t: float) -> float:
    """Brake power in kW for speed n (rpm) and torque t (N*m): 2*pi*n*t/60000."""
    if n <= 0:
        raise MetricsError(f"speed must be > 0 rpm, got {n}")
    if t < 0:
        raise MetricsError(f"torque must be >= 0 N*m, got {t}")
    return 2.0 * math.pi * n * t / 60000.0


def bsfc(fuel_flow: float, bp: float) -> float:
    """Brake specific fuel consumption in kg/kWh: fuel flow (kg/h) over brake power (kW)."""
    if bp <= 0:
        raise MetricsError(f"brake power must be > 0 kW, got {bp}")
    if fuel_flow < 0:
        raise MetricsError(f"fuel flow must be >= 0 kg/h, got {fuel_flow}")
    return fuel_flow / bp


@dataclass(frozen=True)
class BlendMaxima:
    """Max power and torque attained by one blend, with the rpm of each."""

    blend_pct: float
    max_power_kw: float
    max_power_rpm: float
    max_torque_nm: float
    max_torque_rpm: float


@dataclass(frozen=True)
class EngineSummary:
    """Per-blend maxima, global maxima, and percent deltas vs the 0% blend."""

    per_blend: tuple
    global_max_power_kw: float
    global_max_power_rpm: float
    global_max_power_blend: float
    global_max_torque_nm: float
    global_max_torque_rpm: float
    global_max_torque_blend: float
    deltas_vs_b0: tuple  # (blend_pct, power_delta_pct, torque_delta_pct)

    def as_dict(self) -> dict:
        return {
            "per_blend": [{
                "blend_pct": b.blend_pct,
                "max_power_kw": b.max_power_kw, "max_power_rpm": b.max_power_rpm,
                "max_torque_nm": b.max_torque_nm, "max_torque_rpm": b.max_torque_rpm,
            } for b in self.per_blend],
            "global_max_power": {"kw": self.global_max_power_kw,
                                 "rpm": self.global_max_power_rpm,
                                 "blend_pct": self.global_max_power_blend},
            "global_max_torque": {"nm": self.global_max_torque_nm,
                                  "rpm": self.global_max_torque_rpm,
                                  "blend_pct": self.global_max_torque_blend},
            "deltas_vs_b0": [{"blend_pct": b, "power_delta_pct": p, "torque_delta_pct": t}
                             for b, p, t in self.deltas_vs_b0],
        }


def _argmax_stable(values) -> int:
    """Index of the maximum; first occurrence wins ties (stable scan)."""
    best, best_i = -math.inf, 0
    for i, v in enumerate(values):
        if v > best:
            best, best_i = v, i
    return best_i


def summarize(data: Dataset, deltas: bool = True) -> EngineSummary:
    """Exact maxima over dataset rows, per blend and global, plus B0 deltas.

    Deltas are 100*(blend_max - b0_max)/b0_max, rounded to 2 decimals.
    Requires rows at blend 0 when deltas is True.
    """
    if len(data) == 0:
        raise MetricsError("empty dataset")

    per_blend = []
    for blend in data.blends():
        rows = [p for p in data.patterns if p.blend == blend]
        powers = [p.power_kw for p in rows]
        torques = [p.torque_nm for p in rows]
        ip = _argmax_stable(powers)
        it = _argmax_stable(torques)
        per_blend.append(BlendMaxima(
            blend_pct=blend,
            max_power_kw=rows[ip].power_kw, max_power_rpm=rows[ip].speed_rpm,
            max_torque_nm=rows[it].torque_nm, max_torque_rpm=rows[it].speed_rpm))

    powers = [p.power_kw for p in data.patterns]
    torques = [p.torque_nm for p in data.patterns]
    gp = _argmax_stable(powers)
    gt = _argmax_stable(torques)

    delta_rows = []
    if deltas:
        b0 = next((b for b in per_blend if b.blend_pct == 0), None)
        if b0 is None:
            raise MetricsError("no rows at blend 0; cannot compute deltas")
        for b in per_blend:
            if b.blend_pct == 0:
                continue
            delta_rows.append((
                b.blend_pct,
                round(100.0 * (b.max_power_kw - b0.max_power_kw) / b0.max_power_kw, 2),
                round(100.0 * (b.max_torque_nm - b0.max_torque_nm) / b0.max_torque_nm, 2)))

    return EngineSummary(
        per_blend=tuple(per_blend),
        global_max_power_kw=data.patterns[gp].power_kw,
        global_max_power_rpm=data.patterns[gp].speed_rpm,
        global_max_power_blend=data.patterns[gp].blend,
        global_max_torque_nm=data.patterns[gt].torque_nm,
        global_max_torque_rpm=data.patterns[gt].speed_rpm,
        global_max_torque_blend=data.patterns[gt].blend,
        deltas_vs_b0=tuple(delta_rows))


def power_consistency(data: Dataset) -> dict:
    """Compare each row's printed power against brake_power(speed, torque).

    The printed powers are measurements, so the relative differences are
    reported, never asserted. Returns per-row records plus the observed
    min/max relative difference.
    """
    rows = []
    for p in data.patterns:
        computed = brake_power(p.speed_rpm, p.torque_nm)
        rel = abs(computed - p.power_kw) / p.power_kw
        rows.append({"sno": p.sno, "speed_rpm": p.speed_rpm, "torque_nm": p.torque_nm,
                     "power_kw_printed": p.power_kw, "power_kw_from_torque": computed,
                     "rel_diff": rel})
    rels = [r["rel_diff"] for r in rows]
    return {"rows": rows, "rel_diff_min": min(rels), "rel_diff_max": max(rels)}
