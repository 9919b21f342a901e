#!/usr/bin/env python3
# Copyright 2026 The cfbench Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Line-oriented JSON model server used by the cfbench process backend.

Reads one request per line on stdin and writes one reply per line on stdout.
See include/cfbench/process_backend.h for the protocol.

Two modes:
  --toy           small numpy models with known closed forms, for tests
  --classifier .. Hugging Face models (transformers + torch)

Token ids exchanged with the client are content tokens only; the server adds
[CLS] and the trailing [SEP] itself.
"""

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


class ToyModels:
    """Bag-of-embeddings classifier with sum pooling and simple stand-ins."""

    def __init__(self, vocab_size, dim, seed, workdir):
        rng = np.random.default_rng(seed)
        words = [f"w{i}" for i in range(vocab_size - len(SPECIALS))]
        self.vocab = SPECIALS + words
        self.emb = rng.normal(0, 1 / math.sqrt(dim), (len(self.vocab), dim)).astype(np.float32)
        self.weights = rng.normal(0, 1, (2, dim))
        self.bias = rng.normal(0, 0.1, 2)
        self.vocab_file = os.path.join(workdir, "vocab.txt")
        self.emb_file = os.path.join(workdir, "embeddings.f32")
        with open(self.vocab_file, "w") as f:
            f.write("\n".join(self.vocab) + "\n")
        self.emb.astype("<f4").tofile(self.emb_file)

    def info(self):
        return {
            "classifier": {
                "model_id": "toy-server-bag",
                "vocab_file": self.vocab_file,
                "embedding_file": self.emb_file,
                "vocab_size": len(self.vocab),
                "embedding_dim": int(self.emb.shape[1]),
                "max_length": 64,
                "toy_weights": self.weights.tolist(),
                "toy_bias": self.bias.tolist(),
            },
            "mlm": {"model_id": "toy-server-mlm"},
            "lm": {"model_id": "toy-server-lm"},
            "generator": {"model_id": "toy-server-reverse"},
        }

    def logits(self, ids):
        x = self.emb[np.asarray(ids, dtype=np.int64)].astype(np.float64).sum(axis=0)
        return (self.weights @ x + self.bias).tolist()

    def classify(self, batch):
        return [self.logits(ids) for ids in batch]

    def gradients(self, ids, label):
        return [self.weights[label].tolist() for _ in ids]

    def mlm(self, ids, position, k):
        # Scores by similarity to the left neighbour; specials excluded.
        left = ids[position - 1] if position > 0 else ids[min(1, len(ids) - 1)]
        scores = self.emb.astype(np.float64) @ self.emb[left].astype(np.float64)
        scores[: len(SPECIALS)] = -np.inf
        p = np.exp(scores - scores[np.isfinite(scores)].max())
        p /= p.sum()
        order = sorted(range(len(p)), key=lambda i: (-p[i], i))[:k]
        return [[int(i), float(p[i])] for i in order]

    def perplexity(self, text):
        return float(len(text.split()) + 1)

    def generate(self, text, code):
        return [" ".join(reversed(text.split()))]


class HfModels:
    """Sequence classifier, masked LM, causal LM and controlled generator."""

    def __init__(self, args, workdir):
        import torch
        from transformers import (AutoModelForCausalLM, AutoModelForMaskedLM,
                                  AutoModelForSequenceClassification, AutoTokenizer)

        self.torch = torch
        self.device = torch.device(args.device)
        self.tok = AutoTokenizer.from_pretrained(args.classifier)
        self.clf = AutoModelForSequenceClassification.from_pretrained(args.classifier)
        self.clf.to(self.device).eval()
        self.clf_id = args.classifier
        self.max_length = args.max_length
        vocab = self.tok.convert_ids_to_tokens(list(range(len(self.tok))))
        self.vocab_file = os.path.join(workdir, "vocab.txt")
        with open(self.vocab_file, "w") as f:
            f.write("\n".join(vocab) + "\n")
        emb = self.clf.get_input_embeddings().weight.detach().cpu().numpy()
        self.emb_file = os.path.join(workdir, "embeddings.f32")
        emb.astype("<f4").tofile(self.emb_file)
        self.emb_shape = emb.shape
        self.mlm_model = self.mlm_id = None
        if args.mlm:
            self.mlm_model = AutoModelForMaskedLM.from_pretrained(args.mlm).to(self.device).eval()
            self.mlm_id = args.mlm
        self.lm = self.lm_id = None
        if args.lm:
            self.lm_tok = AutoTokenizer.from_pretrained(args.lm)
            self.lm = AutoModelForCausalLM.from_pretrained(args.lm).to(self.device).eval()
            self.lm_id = args.lm
        self.gen = self.gen_id = None
        if args.generator:
            self.gen_tok = AutoTokenizer.from_pretrained(args.generator)
            self.gen = AutoModelForCausalLM.from_pretrained(args.generator).to(self.device).eval()
            self.gen_id = args.generator

    def info(self):
        def model(mid):
            return {"model_id": mid} if mid else None

        return {
            "classifier": {
                "model_id": self.clf_id,
                "vocab_file": self.vocab_file,
                "embedding_file": self.emb_file,
                "vocab_size": int(self.emb_shape[0]),
                "embedding_dim": int(self.emb_shape[1]),
                "max_length": self.max_length,
            },
            "mlm": model(self.mlm_id),
            "lm": model(self.lm_id),
            "generator": model(self.gen_id),
        }

    def _wrap(self, ids):
        full = [self.tok.cls_token_id] + list(ids) + [self.tok.sep_token_id]
        types, seen_sep = [], False
        for t in full:
            types.append(1 if seen_sep else 0)
            if t == self.tok.sep_token_id:
                seen_sep = True
        return full, types

    def _batch(self, batch):
        torch = self.torch
        wrapped = [self._wrap(ids) for ids in batch]
        width = max(len(w[0]) for w in wrapped)
        pad = self.tok.pad_token_id
        input_ids = torch.full((len(batch), width), pad, dtype=torch.long)
        types = torch.zeros((len(batch), width), dtype=torch.long)
        mask = torch.zeros((len(batch), width), dtype=torch.long)
        for i, (ids, tt) in enumerate(wrapped):
            input_ids[i, : len(ids)] = torch.tensor(ids)
            types[i, : len(tt)] = torch.tensor(tt)
            mask[i, : len(ids)] = 1
        return input_ids.to(self.device), types.to(self.device), mask.to(self.device)

    def classify(self, batch):
        out = []
        with self.torch.no_grad():
            for start in range(0, len(batch), 32):
                ids, types, mask = self._batch(batch[start : start + 32])
                logits = self.clf(input_ids=ids, token_type_ids=types, attention_mask=mask).logits
                out.extend(logits.double().cpu().tolist())
        return out

    def gradients(self, ids, label):
        full, types = self._wrap(ids)
        input_ids = self.torch.tensor([full], device=self.device)
        embeds = self.clf.get_input_embeddings()(input_ids).detach().requires_grad_(True)
        logits = self.clf(inputs_embeds=embeds,
                          token_type_ids=self.torch.tensor([types], device=self.device)).logits
        logits[0, label].backward()
        return embeds.grad[0, 1:-1].double().cpu().tolist()

    def mlm(self, ids, position, k):
        full, types = self._wrap(ids)
        full[position + 1] = self.tok.mask_token_id
        with self.torch.no_grad():
            logits = self.mlm_model(
                input_ids=self.torch.tensor([full], device=self.device),
                token_type_ids=self.torch.tensor([types], device=self.device)).logits
        probs = self.torch.softmax(logits[0, position + 1].double(), dim=-1)
        top = self.torch.topk(probs, k)
        return [[int(i), float(p)] for p, i in zip(top.values.tolist(), top.indices.tolist())]

    def perplexity(self, text):
        enc = self.lm_tok(text, return_tensors="pt").input_ids.to(self.device)
        if enc.shape[1] == 1:
            # One token: score it after the beginning-of-text token.
            bos = self.torch.tensor([[self.lm_tok.bos_token_id]], device=self.device)
            enc = self.torch.cat([bos, enc], dim=1)
        with self.torch.no_grad():
            loss = self.lm(enc, labels=enc).loss
        return float(math.exp(loss.item()))

    def generate(self, text, code):
        # Only the part before the pair separator is perturbed; the client
        # restores the rest.
        head = text.split(" [SEP] ")[0]
        prompt = f"{head} <|perturb|> [{code}]" if code else f"{head} <|perturb|>"
        enc = self.gen_tok(prompt, return_tensors="pt").input_ids.to(self.device)
        with self.torch.no_grad():
            out = self.gen.generate(enc, max_new_tokens=64, do_sample=False,
                                    pad_token_id=self.gen_tok.eos_token_id)
        raw = self.gen_tok.decode(out[0][enc.shape[1]:], skip_special_tokens=False)
        raw = raw.split("<|endoftext|>")[0].strip()
        if raw.startswith("]"):
            raw = raw[1:].strip()
        if "[SEP]" in raw and "[BLANK]" in raw:
            # Blanked template plus answers: fill the blanks in order.
            template, answers = raw.split("[SEP]", 1)
            fills = [a.strip() for a in answers.split("[ANSWER]") if a.strip()]
            for fill in fills:
                template = template.replace("[BLANK]", fill, 1)
            raw = template.replace("[BLANK]", "").strip()
        return [raw]


def serve(models):
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
            if op == "info":
                reply = models.info()
            elif op == "classify":
                reply = {"logits": models.classify(req["batch"])}
            elif op == "gradients":
                reply = {"gradients": models.gradients(req["ids"], int(req["label"]))}
            elif op == "mlm":
                reply = {"candidates": models.mlm(req["ids"], int(req["position"]), int(req["k"]))}
            elif op == "perplexity":
                reply = {"perplexity": models.perplexity(req["text"])}
            elif op == "generate":
                reply = {"generations": models.generate(req["text"], req.get("code"))}
            else:
                raise ValueError(f"unknown op {op!r}")
            reply["ok"] = True
        except Exception as e:  # reported to the client, never fatal
            reply = {"ok": False, "error": f"{type(e).__name__}: {e}"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--toy", action="store_true")
    p.add_argument("--vocab-size", type=int, default=12)
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classifier")
    p.add_argument("--mlm")
    p.add_argument("--lm")
    p.add_argument("--generator")
    p.add_argument("--max-length", type=int, default=510)
    p.add_argument("--device", default="cpu")
    args = p.parse_args()
    with tempfile.TemporaryDirectory(prefix="cfbench-server-") as workdir:
        if args.toy:
            models = ToyModels(args.vocab_size, args.dim, args.seed, workdir)
        elif args.classifier:
            models = HfModels(args, workdir)
        else:
            p.error("pass --toy or --classifier")
        serve(models)


if __name__ == "__main__":
    main()
