"""CLIP text encoder with one learnable marker token spliced into the input embeddings."""

import hashlib

import torch

MAX_LENGTH = 77


class BridgeError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class MarkerClip:
    """Wraps a CLIPTextModelWithProjection and its tokenizer.

    The marker never enters the tokenizer vocabulary. Its position is filled
    with the seed word's id (so EOS pooling is unaffected) and a forward hook
    on the token embedding overwrites that position with the supplied vector.
    """

    def __init__(self, model, tokenizer, name, device="cpu", dtype=torch.float32):
        self.model = model.to(device=device, dtype=dtype).eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.tokenizer = tokenizer
        self.name = name
        self.device = device
        self.dtype = dtype
        self.marker = None
        self.placeholder_id = None
        self._override = None
        emb = self.model.text_model.embeddings.token_embedding
        emb.register_forward_hook(self._hook)
        self.embed_dim = emb.weight.shape[1]
        self.pooled_dim = self.model.config.projection_dim
        self.vocab_size = emb.weight.shape[0]
        self.checksum = self._checksum()

    def _checksum(self):
        h = hashlib.sha256()
        for key, tensor in sorted(self.model.state_dict().items()):
            h.update(key.encode())
            h.update(tensor.detach().to("cpu", torch.float32).contiguous().numpy().tobytes())
        return h.hexdigest()

    def _hook(self, module, inputs, output):
        if self._override is None:
            return output
        mask, vector = self._override
        return torch.where(mask[..., None], vector.to(output.dtype).expand_as(output), output)

    def info(self):
        return {
            "name": self.name,
            "embed_dim": self.embed_dim,
            "pooled_dim": self.pooled_dim,
            "max_length": MAX_LENGTH,
            "vocab_size": self.vocab_size,
            "injectable": True,
            "checksum": self.checksum,
        }

    def _piece_ids(self, text):
        return self.tokenizer(text, add_special_tokens=False)["input_ids"] if text.strip() else []

    def encode_ids(self, prompt):
        """Token ids padded to MAX_LENGTH plus a boolean marker mask."""
        pieces = prompt.split(self.marker) if self.marker else [prompt]
        ids, is_marker = [self.tokenizer.bos_token_id], [False]
        for i, piece in enumerate(pieces):
            if i > 0:
                ids.append(self.placeholder_id)
                is_marker.append(True)
            piece_ids = self._piece_ids(piece)
            ids += piece_ids
            is_marker += [False] * len(piece_ids)
        ids.append(self.tokenizer.eos_token_id)
        is_marker.append(False)
        if len(ids) > MAX_LENGTH:
            raise BridgeError("PromptOverflow", f"{len(ids)} tokens exceed {MAX_LENGTH}")
        pad = self.tokenizer.pad_token_id if self.tokenizer.pad_token_id is not None else self.tokenizer.eos_token_id
        fill = MAX_LENGTH - len(ids)
        ids += [pad] * fill
        is_marker += [False] * fill
        return (torch.tensor([ids], device=self.device),
                torch.tensor([is_marker], device=self.device))

    def tokenize(self, prompt):
        ids, mask = self.encode_ids(prompt)
        out = []
        for i, m in zip(ids[0].tolist(), mask[0].tolist()):
            text = self.marker if m else self.tokenizer.convert_ids_to_tokens(i)
            out.append({"text": text, "id": int(i), "is_marker": bool(m)})
            if i == self.tokenizer.eos_token_id and not m:
                break
        return out

    def inject(self, marker, init, seed_word, seed):
        # A restarted client re-injects its own marker; only a second marker is refused.
        if self.marker is not None and self.marker != marker:
            raise BridgeError("AlreadyInjected", f"backend already hosts marker '{self.marker}'")
        if len(self.tokenizer(marker, add_special_tokens=False)["input_ids"]) == 0:
            raise BridgeError("InvalidArgument", "empty marker")
        seed_ids = self._piece_ids(seed_word)
        if len(seed_ids) != 1:
            raise BridgeError("InvalidArgument", f"seed word '{seed_word}' is not a single token")
        table = self.model.text_model.embeddings.token_embedding.weight
        if init == "seed-word":
            vector = table[seed_ids[0]].detach().clone()
        else:
            g = torch.Generator().manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
            noise = torch.randn(self.embed_dim, generator=g, dtype=torch.float64)
            vector = noise / noise.norm() * table.detach().double().norm(dim=1).mean()
        self.marker = marker
        self.placeholder_id = seed_ids[0]
        return {"id": self.vocab_size, "vector": vector.double().tolist()}

    def hidden(self, prompt, token, requires_grad=False):
        """(penultimate hidden states, projected pooled output, token leaf)."""
        ids, mask = self.encode_ids(prompt)
        leaf = None
        if mask.any():
            if token is None or len(token) != self.embed_dim:
                raise BridgeError("DimensionMismatch", f"token must have {self.embed_dim} values")
            leaf = torch.tensor(token, dtype=torch.float64, device=self.device, requires_grad=requires_grad)
            self._override = (mask, leaf.to(self.dtype))
        try:
            out = self.model(input_ids=ids, output_hidden_states=True)
        finally:
            self._override = None
        return out.hidden_states[-2], out.text_embeds, leaf

    def pooled(self, prompt, token):
        with torch.no_grad():
            _, pooled, _ = self.hidden(prompt, token)
        return pooled[0].double().tolist()

    def vjp(self, prompt, token, upstream):
        if len(upstream) != self.pooled_dim:
            raise BridgeError("DimensionMismatch", f"upstream must have {self.pooled_dim} values")
        with torch.enable_grad():
            _, pooled, leaf = self.hidden(prompt, token, requires_grad=True)
            if leaf is None:
                return [0.0] * self.embed_dim
            up = torch.tensor(upstream, dtype=pooled.dtype, device=self.device)
            (grad,) = torch.autograd.grad((pooled[0] * up).sum(), leaf)
        return grad.double().tolist()
