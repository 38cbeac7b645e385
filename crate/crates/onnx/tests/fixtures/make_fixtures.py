"""Regenerates the tiny encoder fixtures and their expected outputs.

Run from this directory: python3 make_fixtures.py
"""
import json

import numpy as np
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors

SIZE = 32
DIM = 16
CTX = 12
MEAN = [0.48145466, 0.4578275, 0.40821073]
STD = [0.26862954, 0.26130258, 0.27577711]

torch.manual_seed(0)


class Image(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = torch.nn.Conv2d(3, 8, 3, stride=2)
        self.fc = torch.nn.Linear(8, DIM)

    def forward(self, x):
        h = torch.relu(self.conv(x)).mean(dim=(2, 3))
        return self.fc(h)


class Text(torch.nn.Module):
    def __init__(self, vocab):
        super().__init__()
        self.emb = torch.nn.Embedding(vocab, 8)
        self.fc = torch.nn.Linear(8, DIM)

    def forward(self, ids):
        return self.fc(torch.tanh(self.emb(ids)).mean(dim=1))


words = sorted(
    set(
        "a high quality low good bad sharp blurry clear noisy natural unnatural "
        "photo of digital human body face probe".split()
    )
)
vocab = {"[PAD]": 0, "[UNK]": 1, "[BOS]": 2, "[EOS]": 3}
for w in words:
    vocab[w] = len(vocab)
tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
tok.normalizer = normalizers.Lowercase()
tok.pre_tokenizer = pre_tokenizers.Whitespace()
tok.post_processor = processors.TemplateProcessing(
    single="[BOS] $A [EOS]", special_tokens=[("[BOS]", 2), ("[EOS]", 3)]
)
tok.save("tokenizer.json")

image, text = Image().eval(), Text(len(vocab)).eval()
torch.onnx.export(image, torch.zeros(1, 3, SIZE, SIZE), "image.onnx",
                  input_names=["pixel_values"], output_names=["embeds"], dynamo=False)
torch.onnx.export(text, torch.zeros(1, CTX, dtype=torch.long), "text.onnx",
                  input_names=["input_ids"], output_names=["embeds"], dynamo=False)
json.dump({"input_size": SIZE, "mean": MEAN, "std": STD, "context_length": CTX, "pad_id": 0},
          open("embedder.json", "w"), indent=2)


def pattern(seed):
    y, x = np.mgrid[0:SIZE, 0:SIZE]
    r = (x * 7 + y * 3 + seed * 11) % 256
    g = (x * y + seed * 5) % 256
    b = (255 - x * 4 - seed) % 256
    return np.stack([r, g, b]).astype(np.float32)


expected = {"images": {}, "texts": {}}
with torch.no_grad():
    for seed in range(3):
        px = pattern(seed) / 255.0
        px = (px - np.array(MEAN, np.float32)[:, None, None]) / np.array(STD, np.float32)[:, None, None]
        e = image(torch.from_numpy(px[None])).numpy()[0]
        expected["images"][str(seed)] = (e / np.linalg.norm(e)).tolist()
    for t in ["a photo of a high quality digital human body", "blurry noisy face", "Sharp"]:
        ids = tok.encode(t).ids[:CTX]
        ids += [0] * (CTX - len(ids))
        e = text(torch.tensor([ids])).numpy()[0]
        expected["texts"][t] = (e / np.linalg.norm(e)).tolist()
json.dump(expected, open("expected.json", "w"), indent=1)
