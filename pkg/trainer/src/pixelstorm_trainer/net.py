"""The fixed victim architecture and its torch training loop.

conv3x3x16 (same) / relu / avgpool2 / conv3x3x32 (same) / relu / avgpool2 /
flatten / dense(num_classes) / softmax. Inputs are uint8 images divided by
255 - the same convention the attack-side inference engine applies, so the
exported weights behave identically there.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn


class SmallConvNet(nn.Module):
    def __init__(self, input_side: int, num_classes: int):
        super().__init__()
        if input_side % 4 != 0:
            raise ValueError(f"input side must be divisible by 4, got {input_side}")
        self.input_side = input_side
        self.num_classes = num_classes
        self.conv1 = nn.Conv2d(3, 16, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(16, 32, kernel_size=3, padding=1)
        self.pool = nn.AvgPool2d(2)
        side = input_side // 4
        self.head = nn.Linear(side * side * 32, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.pool(torch.relu(self.conv2(x)))
        return self.head(torch.flatten(x, 1))


def _to_batches(images: np.ndarray, labels: np.ndarray, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(images.shape[0])
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        yield images[idx], labels[idx]


def _as_input(images: np.ndarray) -> torch.Tensor:
    # uint8 HWC -> float CHW in [0, 1]
    x = torch.from_numpy(images.astype(np.float32) / 255.0)
    return x.permute(0, 3, 1, 2).contiguous()


def train(
    model: SmallConvNet,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    *,
    epochs: int = 5,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
    seed: int = 0,
) -> None:
    # single-threaded: multi-threaded CPU reductions make repeated runs drift
    torch.set_num_threads(1)
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    model.train()
    for _epoch in range(epochs):
        for batch_images, batch_labels in _to_batches(train_images, train_labels, batch_size, rng):
            optimizer.zero_grad()
            logits = model(_as_input(batch_images))
            loss = loss_fn(logits, torch.from_numpy(batch_labels))
            loss.backward()
            optimizer.step()


@torch.no_grad()
def predict_probs(model: SmallConvNet, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    model.eval()
    outputs = []
    for start in range(0, images.shape[0], batch_size):
        logits = model(_as_input(images[start : start + batch_size]))
        outputs.append(torch.softmax(logits, dim=1).numpy())
    return np.concatenate(outputs)


def accuracy(model: SmallConvNet, images: np.ndarray, labels: np.ndarray) -> float:
    probs = predict_probs(model, images)
    return float((probs.argmax(axis=1) == labels).mean())
