"""Export a Hugging Face CLIP checkpoint into the layout read by `--embedder model:<dir>`.

    python scripts/export_clip.py openai/clip-vit-base-patch32 models/clip-b32

Writes image.onnx, text.onnx, tokenizer.json and embedder.json. Requires
torch and transformers.
"""

import argparse
import json
from pathlib import Path

import torch
from transformers import CLIPModel, CLIPTokenizerFast


class ImageEncoder(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, pixels):
        return self.model.get_image_features(pixel_values=pixels)


class TextEncoder(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, ids, mask):
        return self.model.get_text_features(input_ids=ids, attention_mask=mask)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("checkpoint")
    ap.add_argument("out", type=Path)
    ap.add_argument("--opset", type=int, default=17)
    args = ap.parse_args()

    model = CLIPModel.from_pretrained(args.checkpoint).eval()
    tok = CLIPTokenizerFast.from_pretrained(args.checkpoint)
    args.out.mkdir(parents=True, exist_ok=True)

    size = model.config.vision_config.image_size
    ctx = model.config.text_config.max_position_embeddings
    pixels = torch.zeros(1, 3, size, size)
    ids = torch.zeros(1, ctx, dtype=torch.int64)
    mask = torch.ones(1, ctx, dtype=torch.int64)

    with torch.no_grad():
        torch.onnx.export(ImageEncoder(model), (pixels,), args.out / "image.onnx",
                          input_names=["pixels"], output_names=["embedding"],
                          opset_version=args.opset, dynamo=False)
        torch.onnx.export(TextEncoder(model), (ids, mask), args.out / "text.onnx",
                          input_names=["ids", "mask"], output_names=["embedding"],
                          opset_version=args.opset, dynamo=False)

    tok.backend_tokenizer.save(str(args.out / "tokenizer.json"))
    config = {
        "input_size": size,
        "mean": [0.48145466, 0.4578275, 0.40821073],
        "std": [0.26862954, 0.26130258, 0.27577711],
        "context_length": ctx,
        "pad_id": tok.pad_token_id if tok.pad_token_id is not None else 49407,
    }
    (args.out / "embedder.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
