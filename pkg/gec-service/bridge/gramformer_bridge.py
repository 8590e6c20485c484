#!/usr/bin/env python3
"""Stdio bridge between gec-service and the Gramformer corrector.

Protocol: one JSON object per line on stdin/stdout.

    in:  {"id": 1, "texts": ["I has a dog", ...]}
    out: {"id": 1, "texts": ["I have a dog", ...]}

The first request the service sends is an empty handshake ({"texts": []});
answering it proves the model loaded.  Decoding is greedy (num_beams=1) so
repeated queries are identical, which the toolkit's determinism probe
checks.  Set GEC_DEVICE=cuda to run on GPU.

Requires: pip install gramformer torch
"""

import json
import os
import sys


def load_model():
    from gramformer import Gramformer

    use_gpu = os.environ.get("GEC_DEVICE", "").lower().startswith("cuda")
    return Gramformer(models=1, use_gpu=use_gpu)


def main() -> int:
    model = None
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        texts = request.get("texts", [])
        try:
            if model is None:
                model = load_model()
            corrected = []
            for text in texts:
                # correct() returns a set; take the single greedy candidate
                candidates = model.correct(text, max_candidates=1)
                corrected.append(next(iter(candidates)) if candidates else text)
            response = {"id": request.get("id"), "texts": corrected}
        except Exception as exc:  # surfaced as HTTP 500 by the service
            response = {"id": request.get("id"), "error": str(exc)}
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
