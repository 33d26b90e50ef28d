#!/usr/bin/env python3
"""Serves an SD3-family pipeline for `{"type": "http"}` generation backends.

The two CLIP encoders are conditioned through the same marker splice as the
encoder bridge. The T5 encoder is dropped (zero embeddings) unless the request
asks for "seed-word", in which case the marker is replaced by the seed word
in the T5 prompt.

    python diffusion_server.py --model /models/stable-diffusion-3-medium-diffusers --port 8201
"""

import argparse
import base64
import io
import logging
import threading

import torch
from diffusers import StableDiffusion3Pipeline

from jsonhttp import serve
from marker_clip import BridgeError, MarkerClip

T5_LENGTH = 256


class Generator:
    def __init__(self, model_dir, device, dtype, keep_t5, seed_word):
        kwargs = {} if keep_t5 else {"text_encoder_3": None, "tokenizer_3": None}
        self.pipe = StableDiffusion3Pipeline.from_pretrained(model_dir, torch_dtype=dtype, **kwargs).to(device)
        self.device = device
        self.dtype = dtype
        self.seed_word = seed_word
        self.clips = {
            "clip-l": MarkerClip(self.pipe.text_encoder, self.pipe.tokenizer, "clip-l", device, dtype),
            "clip-g": MarkerClip(self.pipe.text_encoder_2, self.pipe.tokenizer_2, "clip-g", device, dtype),
        }
        self.t5_dim = self.pipe.transformer.config.joint_attention_dim
        self.lock = threading.Lock()

    def info(self):
        encoders = [{"name": n, "embed_dim": c.embed_dim, "injectable": True} for n, c in self.clips.items()]
        has_t5 = self.pipe.text_encoder_3 is not None
        if has_t5:
            encoders.append({"name": "t5", "embed_dim": self.pipe.text_encoder_3.config.d_model, "injectable": False})
        return {
            "name": "sd3",
            "encoders": encoders,
            "has_third_encoder": True,
            "can_drop_third_encoder": True,
            "supports_seeding": True,
        }

    def _set_marker(self, marker):
        for clip in self.clips.values():
            if marker is None:
                clip.marker = None
            elif clip.marker != marker:
                clip.marker = None
                clip.inject(marker, "seed-word", self.seed_word, 0)

    def _clip_embeds(self, prompt, tokens):
        hidden, pooled = [], []
        with torch.no_grad():
            for name, clip in self.clips.items():
                h, p, _ = clip.hidden(prompt, tokens.get(name) if tokens else None)
                hidden.append(h)
                pooled.append(p)
        return torch.cat(hidden, dim=-1), torch.cat(pooled, dim=-1)

    def _t5_embeds(self, prompt, policy):
        if policy == "drop" or self.pipe.text_encoder_3 is None:
            return torch.zeros(1, T5_LENGTH, self.t5_dim, device=self.device, dtype=self.dtype)
        ids = self.pipe.tokenizer_3(prompt, padding="max_length", max_length=T5_LENGTH, truncation=True,
                                    return_tensors="pt").input_ids.to(self.device)
        with torch.no_grad():
            return self.pipe.text_encoder_3(ids)[0].to(self.dtype)

    def _condition(self, prompt, marker, tokens, policy):
        clip_hidden, pooled = self._clip_embeds(prompt, tokens)
        clip_hidden = torch.nn.functional.pad(clip_hidden, (0, self.t5_dim - clip_hidden.shape[-1]))
        t5_prompt = prompt.replace(marker, self.seed_word) if marker else prompt
        embeds = torch.cat([clip_hidden.to(self.dtype), self._t5_embeds(t5_prompt, policy)], dim=-2)
        return embeds, pooled.to(self.dtype)

    def generate(self, req):
        marker = req.get("marker")
        tokens = req.get("token")
        if (marker is None) != (tokens is None):
            raise BridgeError("InvalidArgument", "marker and token must be given together")
        policy = req.get("third_encoder", "drop")
        with self.lock:
            self._set_marker(marker)
            embeds, pooled = self._condition(req["prompt"], marker, tokens, policy)
            self._set_marker(None)
            neg, neg_pooled = self._condition("", None, None, policy)
            image = self.pipe(
                prompt_embeds=embeds,
                pooled_prompt_embeds=pooled,
                negative_prompt_embeds=neg,
                negative_pooled_prompt_embeds=neg_pooled,
                width=int(req.get("width", 1024)),
                height=int(req.get("height", 1024)),
                num_inference_steps=int(req.get("steps", 28)),
                generator=torch.Generator(self.device).manual_seed(int(req["seed"]) & 0x7FFFFFFFFFFFFFFF),
            ).images[0]
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return {"png_base64": base64.b64encode(buf.getvalue()).decode()}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", required=True)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8201)
    ap.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    ap.add_argument("--dtype", choices=["float16", "bfloat16", "float32"], default="float16")
    ap.add_argument("--keep-t5", action="store_true", help="load the T5 encoder for seed-word requests")
    ap.add_argument("--seed-word", default="creative")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")

    gen = Generator(args.model, args.device, getattr(torch, args.dtype), args.keep_t5, args.seed_word)
    serve(args.host, args.port, {"/info": lambda _: gen.info()}, {"/generate": gen.generate})


if __name__ == "__main__":
    main()
