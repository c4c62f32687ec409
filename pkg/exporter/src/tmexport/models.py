"""The two small classifiers and their training loop.

Both models expose an `export_layers` dict naming the modules whose
outputs (post-ReLU) can be exported. Dropout sits after the named
modules, so exported activations are the clean eval-mode values.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

DEFAULT_EPOCHS = 20
DEFAULT_BATCH_SIZE = 128
DEFAULT_LR = 1e-3
DROPOUT = 0.5


class Mlp(nn.Module):
    """Flatten -> 128-unit ReLU layer (dropout 0.5) -> 10-way head."""

    def __init__(self, n_classes: int = 10):
        super().__init__()
        self.fc1 = nn.Linear(28 * 28, 128)
        self.act1 = nn.ReLU()
        self.drop = nn.Dropout(DROPOUT)
        self.head = nn.Linear(128, n_classes)
        self.export_layers = {"fc1": self.act1}

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.act1(self.fc1(x.flatten(1)))
        return self.head(self.drop(h))


class Cnn(nn.Module):
    """Two 3x3 stride-2 conv layers of 128 filters, spatial dropout 0.5."""

    def __init__(self, n_classes: int = 10):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 128, kernel_size=3, stride=2)
        self.act1 = nn.ReLU()
        self.conv2 = nn.Conv2d(128, 128, kernel_size=3, stride=2)
        self.act2 = nn.ReLU()
        self.drop = nn.Dropout2d(DROPOUT)
        self.head = nn.Linear(6 * 6 * 128, n_classes)
        self.export_layers = {"conv1": self.act1, "conv2": self.act2}

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.act1(self.conv1(x.unsqueeze(1)))
        h = self.act2(self.conv2(h))
        return self.head(self.drop(h).flatten(1))


MODELS = {"mlp": Mlp, "cnn": Cnn}


def build_model(kind: str, n_classes: int = 10, seed: int = 0) -> nn.Module:
    if kind not in MODELS:
        raise ValueError(f"unknown model {kind!r}; expected one of {sorted(MODELS)}")
    torch.manual_seed(seed)
    return MODELS[kind](n_classes)


def train_model(
    model: nn.Module,
    images: np.ndarray,
    labels: np.ndarray,
    epochs: int = DEFAULT_EPOCHS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    lr: float = DEFAULT_LR,
    seed: int = 0,
) -> dict:
    """Adam + cross-entropy for `epochs` passes; returns a training log."""
    x = torch.from_numpy(np.ascontiguousarray(images, dtype=np.float32))
    y = torch.from_numpy(np.ascontiguousarray(labels, dtype=np.int64))
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(seed)
    model.train()
    epoch_losses = []
    for _ in range(epochs):
        order = torch.randperm(len(x), generator=generator)
        total = 0.0
        for start in range(0, len(x), batch_size):
            batch = order[start : start + batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x[batch]), y[batch])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(batch)
        mean_loss = total / len(x)
        if not np.isfinite(mean_loss):
            raise RuntimeError(f"training diverged: non-finite loss {mean_loss}")
        epoch_losses.append(mean_loss)
    model.eval()
    return {
        "epochs": epochs,
        "batch_size": batch_size,
        "optimizer": "adam",
        "lr": lr,
        "loss": epoch_losses,
        "seed": seed,
    }


@torch.no_grad()
def predict(model: nn.Module, images: np.ndarray, batch_size: int = 512) -> np.ndarray:
    model.eval()
    x = torch.from_numpy(np.ascontiguousarray(images, dtype=np.float32))
    out = []
    for start in range(0, len(x), batch_size):
        out.append(model(x[start : start + batch_size]).argmax(dim=1))
    return torch.cat(out).numpy().astype(np.int64)


@torch.no_grad()
def capture_activations(
    model: nn.Module, layer: str, images: np.ndarray, batch_size: int = 512
) -> np.ndarray:
    """Eval-mode outputs of the named export layer, conv as (E, h, w, C)."""
    layers = getattr(model, "export_layers", {})
    if layer not in layers:
        raise ValueError(f"model has no export layer {layer!r}; expected one of {sorted(layers)}")
    grabbed = []
    handle = layers[layer].register_forward_hook(lambda m, inp, out: grabbed.append(out.detach()))
    try:
        model.eval()
        x = torch.from_numpy(np.ascontiguousarray(images, dtype=np.float32))
        for start in range(0, len(x), batch_size):
            model(x[start : start + batch_size])
    finally:
        handle.remove()
    acts = torch.cat(grabbed).numpy().astype(np.float32)
    if acts.ndim == 4:  # torch NCHW -> manifest NHWC
        acts = np.transpose(acts, (0, 2, 3, 1))
    return acts
