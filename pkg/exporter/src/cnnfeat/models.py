"""Feature-extractor construction and input preprocessing.

vgg16 yields the 4096-long activations of the second fully-connected
layer (after its ReLU); resnet50 yields the 2048-long global-average-
pool output. Both use the standard ImageNet eval preprocessing: resize
to 256, centre-crop 224, scale to [0,1], normalise per channel.
"""

import numpy as np
import torch
from torch import nn
from torchvision import models

MODEL_DIMS = {"vgg16": 4096, "resnet50": 2048}

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

PREPROCESS_NOTE = ("resize-256, center-crop-224, scale-1/255, "
                   f"normalize mean={IMAGENET_MEAN} std={IMAGENET_STD}")


class ModelFetchError(RuntimeError):
    """Pretrained weights could not be obtained."""


def build_extractor(name, weights="pretrained", seed=0):
    """Return an eval-mode feature extractor module.

    weights="pretrained" downloads the torchvision reference weights;
    "random" draws a seeded initialisation instead, which keeps exports
    deterministic in offline environments."""
    if name not in MODEL_DIMS:
        raise ValueError(f"unknown model {name!r}; pick from {sorted(MODEL_DIMS)}")
    if weights not in ("pretrained", "random"):
        raise ValueError(f"weights must be 'pretrained' or 'random', got {weights!r}")

    if weights == "random":
        torch.manual_seed(seed)
        kwargs = {"weights": None}
    else:
        kwargs = {"weights": "IMAGENET1K_V1"}

    try:
        if name == "vgg16":
            net = models.vgg16(**kwargs)
            # keep the classifier through the second fc layer + ReLU
            net.classifier = nn.Sequential(*list(net.classifier.children())[:5])
            extractor = net
        else:
            net = models.resnet50(**kwargs)
            extractor = nn.Sequential(*list(net.children())[:-1], nn.Flatten())
    except Exception as exc:  # weight download failures surface here
        raise ModelFetchError(f"could not obtain {name} weights: {exc}") from exc

    extractor.eval()
    for p in extractor.parameters():
        p.requires_grad_(False)
    return extractor


def preprocess(pil_image):
    """PIL image -> normalised float32 tensor of shape (3, 224, 224)."""
    from torchvision import transforms
    pipeline = transforms.Compose([
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])
    return pipeline(pil_image.convert("RGB"))


@torch.no_grad()
def extract_batch(extractor, tensors):
    """Run one batch; returns a (batch, dim) float64 array."""
    out = extractor(torch.stack(tensors))
    return out.detach().cpu().numpy().astype(np.float64)
