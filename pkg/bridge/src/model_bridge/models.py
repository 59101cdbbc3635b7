"""Model zoo: wrappers that turn a batch of univariate series into per-token
embeddings from the model's final representation layer.

Two entries:

- ``surrogate-transformer`` runs fully offline: a frozen randomly
  initialized transformer encoder over mean-pooled patches. Useful for
  exercising the export pipeline and as a known-lossy reference (patch mean
  pooling discards sub-patch structure by construction).
- ``moirai:<hf-id>`` wraps a pretrained Moirai checkpoint via the optional
  ``uni2ts`` package; loading fails with ModelLoadError when the package or
  the weights are unavailable.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .errors import ModelLoadError, ShapeError

SURROGATE_DEFAULTS = {"d_model": 16, "n_layers": 2, "n_heads": 2, "patch_size": 8, "seed": 0}


def parse_model_id(model_id: str):
    """Split 'name:key=value,...' into (name, params)."""
    name, _, tail = model_id.partition(":")
    params = {}
    if name == "surrogate-transformer" and tail:
        for item in tail.split(","):
            key, _, value = item.partition("=")
            if not _ or key not in SURROGATE_DEFAULTS:
                raise ModelLoadError(f"unknown surrogate parameter {item!r}")
            try:
                params[key] = int(value)
            except ValueError as exc:
                raise ModelLoadError(f"surrogate parameter {item!r} must be an integer") from exc
    return name, tail, params


def _sinusoidal_positions(n_tokens: int, d_model: int) -> torch.Tensor:
    position = torch.arange(n_tokens, dtype=torch.float32)[:, None]
    half = torch.arange(0, d_model, 2, dtype=torch.float32)
    rates = torch.exp(-math.log(10000.0) * half / max(d_model, 1))
    table = torch.zeros(n_tokens, d_model)
    table[:, 0::2] = torch.sin(position * rates)
    table[:, 1::2] = torch.cos(position * rates[: table[:, 1::2].shape[1]])
    return table


class SurrogateTransformer(nn.Module):
    """Frozen random-weight encoder over mean-pooled patches.

    Tokenization: non-overlapping patches of `patch_size` samples are
    mean-pooled to a scalar, linearly projected to d_model, summed with a
    sinusoidal position code, and passed through a transformer encoder. The
    final layer's hidden states are the embeddings, one token per patch.
    """

    def __init__(self, d_model=16, n_layers=2, n_heads=2, patch_size=8, seed=0):
        super().__init__()
        torch.manual_seed(seed)
        self.patch_size = patch_size
        self.d_model = d_model
        self.input_proj = nn.Linear(1, d_model)
        layer = nn.TransformerEncoderLayer(
            d_model,
            n_heads,
            dim_feedforward=4 * d_model,
            dropout=0.0,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, n_layers)
        self.eval()
        for parameter in self.parameters():
            parameter.requires_grad_(False)

    @torch.no_grad()
    def forward(self, series: torch.Tensor) -> torch.Tensor:
        """(B, T) float32 -> (B, n_tokens, d_model) final-layer states."""
        b, t = series.shape
        n_tokens = t // self.patch_size
        if n_tokens == 0:
            raise ShapeError(
                f"patch size {self.patch_size} exceeds series length {t}; zero tokens"
            )
        patches = series[:, : n_tokens * self.patch_size].reshape(b, n_tokens, self.patch_size)
        tokens = patches.mean(dim=2, keepdim=True)
        hidden = self.input_proj(tokens) + _sinusoidal_positions(n_tokens, self.d_model)
        return self.encoder(hidden)


class SurrogateWrapper:
    def __init__(self, params: dict, device: str):
        merged = dict(SURROGATE_DEFAULTS)
        merged.update(params)
        if min(merged["d_model"], merged["n_layers"], merged["n_heads"], merged["patch_size"]) < 1:
            raise ModelLoadError(f"surrogate parameters must be positive: {merged}")
        if merged["d_model"] % merged["n_heads"] != 0:
            raise ModelLoadError(
                f"d_model ({merged['d_model']}) must be divisible by n_heads ({merged['n_heads']})"
            )
        self.params = merged
        self.device = device
        try:
            self.module = SurrogateTransformer(**merged).to(device)
        except (RuntimeError, ValueError) as exc:
            raise ModelLoadError(f"cannot build surrogate transformer: {exc}") from exc

    @property
    def model_id(self) -> str:
        tail = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"surrogate-transformer:{tail}"

    @property
    def revision(self) -> str:
        # Weights are a pure function of the architecture parameters and seed.
        return f"frozen-random-v1({self.model_id})"

    def token_mapping(self) -> dict:
        patch = self.params["patch_size"]
        return {
            "kind": "patch",
            "patch_size": patch,
            "stride": patch,
            "offset": 0,
            "note": f"token i summarizes input timesteps [i*{patch}, (i+1)*{patch})",
        }

    def embed_batch(self, series: np.ndarray) -> np.ndarray:
        """(B, T) float64 -> (B, n_tokens, d_model) float64."""
        x = torch.as_tensor(series, dtype=torch.float32, device=self.device)
        out = self.module(x)
        return out.cpu().numpy().astype(np.float64)


class MoiraiWrapper:
    """Adapter for pretrained Moirai checkpoints (requires `uni2ts`)."""

    def __init__(self, checkpoint: str, device: str, patch_size: int = 16):
        try:
            from uni2ts.model.moirai import MoiraiModule  # noqa: F401
        except ImportError as exc:
            raise ModelLoadError(
                "loading a Moirai checkpoint requires the optional 'uni2ts' package "
                "(pip install uni2ts) and network access to fetch the weights"
            ) from exc
        if not checkpoint:
            raise ModelLoadError("moirai model id must name a checkpoint: moirai:<hf-id>")
        from uni2ts.model.moirai import MoiraiModule

        self.checkpoint = checkpoint
        self.device = device
        self.patch_size = patch_size
        try:
            self.module = MoiraiModule.from_pretrained(checkpoint).to(device).eval()
        except Exception as exc:  # pretrained fetch can fail many ways
            raise ModelLoadError(f"cannot load Moirai checkpoint {checkpoint!r}: {exc}") from exc

    @property
    def model_id(self) -> str:
        return f"moirai:{self.checkpoint}"

    @property
    def revision(self) -> str:
        return f"{self.checkpoint}@patch{self.patch_size}"

    def token_mapping(self) -> dict:
        return {
            "kind": "patch",
            "patch_size": self.patch_size,
            "stride": self.patch_size,
            "offset": 0,
            "note": "Moirai patch embedding; final encoder layer states per patch",
        }

    def embed_batch(self, series: np.ndarray) -> np.ndarray:
        import torch as _torch

        b, t = series.shape
        n_tokens = t // self.patch_size
        if n_tokens == 0:
            raise ShapeError(f"patch size {self.patch_size} exceeds series length {t}")
        x = _torch.as_tensor(series[:, : n_tokens * self.patch_size], dtype=_torch.float32)
        x = x.reshape(b, n_tokens, self.patch_size).to(self.device)
        with _torch.no_grad():
            hidden = self.module.encoder(
                self.module.in_proj(x),
                _torch.ones(x.shape[:2], dtype=_torch.bool, device=self.device),
            )
        return hidden.cpu().numpy().astype(np.float64)


def load_model(model_id: str, device: str = "cpu"):
    name, tail, params = parse_model_id(model_id)
    if name == "surrogate-transformer":
        return SurrogateWrapper(params, device)
    if name == "moirai":
        return MoiraiWrapper(tail, device)
    raise ModelLoadError(
        f"unknown model {model_id!r}; expected 'surrogate-transformer[:k=v,...]' or 'moirai:<hf-id>'"
    )
