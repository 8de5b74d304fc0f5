"""
Architecture hyperparameters of the Transformer-encoder / Bi-LSTM network.

The defaults are a desk-scale operating point, not published values.
"""

from typing import Self

from pydantic import Field, model_validator

from app.exceptions import ConfigInvalidError

from .base import SettingsModel


class ModelConfig(SettingsModel):
    """Shapes and regularization of the network. All shapes derive from these fields."""

    block_size: int = Field(default=864, ge=1, description="Samples per input block")
    patch_size: int = Field(default=18, ge=1, description="Samples per patch; model output resolution")
    model_dim: int = Field(default=320, ge=1, description="Embedding width D")
    num_heads: int = Field(default=4, ge=1, description="Attention heads; must divide model_dim")
    num_encoder_layers: int = Field(default=2, ge=1, description="Transformer encoder layers")
    ffn_dim: int | None = Field(default=None, ge=1, description="Feed-forward inner width (default 2*D)")
    lstm_hidden: int | None = Field(default=None, ge=1, description="Bi-LSTM width per direction (default D/2)")
    first_dropout: float = Field(default=0.1, ge=0.0, lt=1.0, description="Dropout on the embedded input")
    encoder_dropout: float = Field(default=0.1, ge=0.0, lt=1.0, description="Dropout on encoder residual branches")
    mha_dropout: float = Field(default=0.1, ge=0.0, lt=1.0, description="Dropout on attention weights")
    post_norm: bool = Field(default=True, description="Residual-then-LayerNorm; False selects pre-norm")

    @model_validator(mode="after")
    def _check_geometry(self) -> Self:
        if self.block_size % self.patch_size != 0:
            raise ConfigInvalidError("patch_size", f"must divide block_size {self.block_size}, got {self.patch_size}")
        if self.model_dim % self.num_heads != 0:
            raise ConfigInvalidError("num_heads", f"must divide model_dim {self.model_dim}, got {self.num_heads}")
        if self.lstm_hidden is None and self.model_dim < 2:
            raise ConfigInvalidError("lstm_hidden", "must be set explicitly when model_dim < 2")
        return self

    @property
    def num_patches(self) -> int:
        return self.block_size // self.patch_size

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.num_heads

    @property
    def hidden_size(self) -> int:
        """Resolved Bi-LSTM width per direction."""
        return self.lstm_hidden if self.lstm_hidden is not None else self.model_dim // 2

    @property
    def ffn_size(self) -> int:
        """Resolved feed-forward inner width."""
        return self.ffn_dim if self.ffn_dim is not None else 2 * self.model_dim
