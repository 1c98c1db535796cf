"""Few-pixel black-box adversarial attacks driven by differential evolution."""

__version__ = "0.1.0"

from .engine import VariantSpec, evolve
from .perturbation import PerturbationGenome, apply_genome
from .classifier import LayeredModel, ModelOracle, classify, load_model
from .attack import AttackOutcome, CampaignReport, attack_image, run_campaign

__all__ = [
    "VariantSpec",
    "evolve",
    "PerturbationGenome",
    "apply_genome",
    "LayeredModel",
    "ModelOracle",
    "classify",
    "load_model",
    "AttackOutcome",
    "CampaignReport",
    "attack_image",
    "run_campaign",
    "__version__",
]
