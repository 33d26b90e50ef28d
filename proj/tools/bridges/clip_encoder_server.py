#!/usr/bin/env python3
"""Serves one frozen CLIP text encoder for `{"type": "http"}` encoder configs.

    python clip_encoder_server.py --model /models/sd3/text_encoder --name clip-l --port 8101
    python clip_encoder_server.py --model /models/sd3/text_encoder_2 --tokenizer /models/sd3/tokenizer_2 \
        --name clip-g --port 8102
"""

import argparse
import logging
import threading

import torch
from transformers import CLIPTextModelWithProjection, CLIPTokenizer

from jsonhttp import serve
from marker_clip import MarkerClip


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", required=True, help="CLIPTextModelWithProjection directory or hub id")
    ap.add_argument("--tokenizer", help="tokenizer directory (default: sibling 'tokenizer' or --model)")
    ap.add_argument("--name", required=True)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8101)
    ap.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    ap.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")

    model = CLIPTextModelWithProjection.from_pretrained(args.model)
    tokenizer = CLIPTokenizer.from_pretrained(args.tokenizer or args.model)
    enc = MarkerClip(model, tokenizer, args.name, args.device, getattr(torch, args.dtype))
    lock = threading.Lock()

    def locked(fn):
        def run(payload):
            with lock:
                return fn(payload)
        return run

    serve(
        args.host,
        args.port,
        {"/info": lambda _: enc.info()},
        {
            "/tokenize": locked(lambda p: {"tokens": enc.tokenize(p["prompt"])}),
            "/inject": locked(lambda p: enc.inject(p["marker"], p.get("init", "seed-word"),
                                                   p.get("seed_word", "creative"), p.get("seed", 0))),
            "/pooled": locked(lambda p: {"pooled": enc.pooled(p["prompt"], p.get("token"))}),
            "/vjp": locked(lambda p: {"grad": enc.vjp(p["prompt"], p.get("token"), p["upstream"])}),
        },
    )


if __name__ == "__main__":
    main()
