"""
Run manifest: everything needed to reconstruct a command invocation.
"""

from pydantic import BaseModel, Field

from app.core.autodiff import ALGORITHM


class RunManifest(BaseModel):
    """Written to the output directory before a command starts working."""

    command: str = Field(..., description="Sub-command name (synth, train, ...)")
    config_path: str | None = Field(default=None, description="Config file the run was started with")
    settings: dict[str, str] = Field(default_factory=dict, description="Resolved flat settings")
    seed: int = Field(..., description="Seed of the run")
    rng_algorithm: str = Field(default=ALGORITHM, description="Bit generator every random stream is drawn from")
    artifacts: dict[str, str] = Field(default_factory=dict, description="Artifact name -> file name in out_dir")
    tool_version: str = Field(..., description="Package version that produced the run")
