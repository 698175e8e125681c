"""edrkit: desk-scale endpoint detection and response toolkit.

Library surface by capability:

    taxonomy     ATT&CK tactic/technique knowledge base
    events       canonical event model and JSONL schema
    features     45-slot window feature extraction
    ingest       sources, noise filtering, dedup, sliding windows
    synth        deterministic labeled scenario generator
    forest       isolation-forest anomaly scoring
    rules        signature/correlation rule model and matching
    correlation  multi-step behavioral sequence matching
    classifier   pluggable window classifier seam + stub
    risk         weighted risk scoring and tiering
    respond      policy-driven response against simulated actuators
    alerts       alert lifecycle and detection grouping
    pipeline     the composed streaming pipeline
    protocol     HMAC envelopes, replay protection, enrollment
    server       management REST API (FastAPI)
    agentd       endpoint agent runtime
    harness      evaluation metrics and benchmarking
"""

__version__ = "0.1.0"

from .events import ProcessRef, SystemEvent, parse_event  # noqa: F401
from .features import FEATURE_NAMES, FeatureVector, extract_features  # noqa: F401
from .forest import anomaly_score, c, train_forest  # noqa: F401
from .risk import RiskFactors, RiskWeights, classify_risk, compute_risk  # noqa: F401
from .taxonomy import Taxonomy, load_bundled_taxonomy, load_taxonomy  # noqa: F401
