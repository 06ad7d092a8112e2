"""Vision-transformer encoder wrapper: image tensors in, one vector per
image out.

The registry currently holds torchvision's vit_b_16 (768-d). Pretrained
weights need a download and a 224x224 input; with --no-pretrained the
weights are seeded-random, which keeps the encoder deterministic, lets
tests run offline, and allows smaller input sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image
from torchvision import transforms
from torchvision.models import vit_b_16

from .errors import ConfigError, ModelLoadError

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)

POOL_MODES = ("mean", "cls")


@dataclass
class Encoder:
    model: torch.nn.Module
    dim: int
    image_size: int
    pool: str
    device: str

    def preprocess(self, image: Image.Image) -> torch.Tensor:
        return self._transform(image.convert("RGB"))

    @property
    def _transform(self):
        resize = int(self.image_size * 256 / 224)
        return transforms.Compose([
            transforms.Resize(resize),
            transforms.CenterCrop(self.image_size),
            transforms.ToTensor(),
            transforms.Normalize(_IMAGENET_MEAN, _IMAGENET_STD),
        ])

    @torch.no_grad()
    def embed(self, batch: torch.Tensor) -> np.ndarray:
        """Encoder tokens for a (b, 3, s, s) batch, pooled to (b, dim)."""
        model = self.model
        x = model._process_input(batch.to(self.device))
        cls = model.class_token.expand(x.shape[0], -1, -1)
        tokens = model.encoder(torch.cat([cls, x], dim=1))
        pooled = tokens[:, 1:].mean(dim=1) if self.pool == "mean" else tokens[:, 0]
        return pooled.cpu().numpy().astype(np.float64)


def load_encoder(
    name: str = "vit_b_16",
    *,
    pool: str = "mean",
    pretrained: bool = True,
    init_seed: int = 0,
    image_size: int = 224,
    device: str = "cpu",
) -> Encoder:
    if name != "vit_b_16":
        raise ConfigError(f"unknown model {name!r}; available: vit_b_16")
    if pool not in POOL_MODES:
        raise ConfigError(f"pool must be one of {POOL_MODES}, got {pool!r}")
    if image_size < 32 or image_size % 16:
        raise ConfigError("image_size must be a multiple of the 16-pixel patch, >= 32")
    if pretrained:
        if image_size != 224:
            raise ConfigError("pretrained vit_b_16 weights require image_size 224")
        try:
            from torchvision.models import ViT_B_16_Weights

            model = vit_b_16(weights=ViT_B_16_Weights.IMAGENET1K_V1)
        except Exception as exc:
            raise ModelLoadError(f"could not load pretrained vit_b_16 weights: {exc}") from exc
    else:
        torch.manual_seed(init_seed)
        try:
            model = vit_b_16(weights=None, image_size=image_size)
        except Exception as exc:
            raise ModelLoadError(f"could not build vit_b_16: {exc}") from exc
    model.eval()
    model.to(device)
    return Encoder(model=model, dim=model.hidden_dim, image_size=image_size,
                   pool=pool, device=device)
