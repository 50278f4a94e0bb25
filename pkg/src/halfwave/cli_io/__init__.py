"""Configuration, initial data, and run orchestration."""
from .config import RunConfig, SCHEMA, reference_config_text
from .datum import DatumSpec, bump_profile, generate_datum, tangent_frame

__all__ = ["RunConfig", "SCHEMA", "reference_config_text", "DatumSpec", "bump_profile", "generate_datum",
           "tangent_frame"]
