"""Weighted risk scoring and response-tier classification.

The score is a convex combination of five bounded factors:

    risk = 0.3 * anomaly + 0.2 * frequency + 0.25 * severity
         + 0.15 * asset_criticality + 0.1 * user_risk

Weights are configurable but must stay in [0, 1] and sum to exactly 1
(checked at startup); factors are validated into [0, 1]. Tier thresholds:
low [0, 0.4), medium [0.4, 0.6), high [0.6, 0.8), critical [0.8, 1.0].
"""

from __future__ import annotations

from dataclasses import dataclass, field

WEIGHT_SUM_TOLERANCE = 1e-9

SEVERITY_BASE = {"low": 0.25, "medium": 0.5, "high": 0.75, "critical": 1.0}

TIERS = ("low", "medium", "high", "critical")
TIER_THRESHOLDS = (0.4, 0.6, 0.8)

# Default static user risk by account type.
USER_RISK_ADMIN = 0.6
USER_RISK_SERVICE = 0.4
USER_RISK_STANDARD = 0.2

DEFAULT_ASSET_CRITICALITY = 0.5


@dataclass(frozen=True)
class RiskWeights:
    anomaly: float = 0.3
    frequency: float = 0.2
    severity: float = 0.25
    asset_criticality: float = 0.15
    user_risk: float = 0.1

    def __post_init__(self):
        parts = (self.anomaly, self.frequency, self.severity,
                 self.asset_criticality, self.user_risk)
        for w in parts:
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight {w} outside [0, 1]")
        total = sum(parts)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"risk weights must sum to 1.0, got {total!r}")


DEFAULT_WEIGHTS = RiskWeights()


@dataclass(frozen=True)
class RiskFactors:
    anomaly_score: float = 0.0
    frequency_score: float = 0.0
    severity_score: float = 0.0
    asset_criticality: float = 0.0
    user_risk: float = 0.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"factor {name}={value} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return {
            "anomaly_score": self.anomaly_score,
            "frequency_score": self.frequency_score,
            "severity_score": self.severity_score,
            "asset_criticality": self.asset_criticality,
            "user_risk": self.user_risk,
        }


@dataclass(frozen=True)
class AssetProfile:
    asset_id: str
    criticality: float = DEFAULT_ASSET_CRITICALITY
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.criticality <= 1.0:
            raise ValueError(f"criticality {self.criticality} outside [0, 1]")


@dataclass(frozen=True)
class UserProfile:
    user_name: str
    base_risk: float = USER_RISK_STANDARD

    def __post_init__(self):
        if not 0.0 <= self.base_risk <= 1.0:
            raise ValueError(f"base_risk {self.base_risk} outside [0, 1]")


@dataclass
class ProfileStore:
    """Asset criticality and static user risk lookups with documented
    defaults: admins 0.6, service accounts 0.4, everyone else 0.2."""

    assets: dict[str, AssetProfile] = field(default_factory=dict)
    users: dict[str, UserProfile] = field(default_factory=dict)

    def asset_criticality(self, asset_id: str) -> float:
        profile = self.assets.get(asset_id)
        return profile.criticality if profile else DEFAULT_ASSET_CRITICALITY

    def user_risk(self, user_name: str) -> float:
        profile = self.users.get(user_name)
        if profile:
            return profile.base_risk
        lowered = user_name.lower()
        if lowered in ("administrator", "admin", "root") or lowered.startswith("adm_"):
            return USER_RISK_ADMIN
        if lowered.startswith(("svc_", "svc-", "service_")) or lowered == "system":
            return USER_RISK_SERVICE
        return USER_RISK_STANDARD


def frequency_score(count: int, threshold: int = 100) -> float:
    """Linear with saturation: min(1, count / threshold)."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if count < 0:
        raise ValueError("count must be non-negative")
    return min(1.0, count / threshold)


def severity_score(level: str, technique_impact: str | None = None) -> float:
    """Base severity mapping, raised (never lowered) by technique impact."""
    base = SEVERITY_BASE.get(level)
    if base is None:
        raise ValueError(f"unknown severity level {level!r}")
    if technique_impact is None:
        return base
    aug = SEVERITY_BASE.get(technique_impact)
    if aug is None:
        raise ValueError(f"unknown impact level {technique_impact!r}")
    return max(base, aug)


def compute_risk(factors: RiskFactors, weights: RiskWeights = DEFAULT_WEIGHTS) -> float:
    """The weighted sum of the five factors; result lies in [0, 1]."""
    return (
        weights.anomaly * factors.anomaly_score
        + weights.frequency * factors.frequency_score
        + weights.severity * factors.severity_score
        + weights.asset_criticality * factors.asset_criticality
        + weights.user_risk * factors.user_risk
    )


def classify_risk(score: float) -> str:
    """Total partition of [0, 1] into response tiers."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"risk score {score} outside [0, 1]")
    if score < TIER_THRESHOLDS[0]:
        return "low"
    if score < TIER_THRESHOLDS[1]:
        return "medium"
    if score < TIER_THRESHOLDS[2]:
        return "high"
    return "critical"
