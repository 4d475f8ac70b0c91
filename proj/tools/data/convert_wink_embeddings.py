#!/usr/bin/env python3
# Copyright 2026 The textpriv Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the wink-embeddings-sg-100d JSON bundle to GloVe text format.

The npm package `wink-embeddings-sg-100d` redistributes the 100-dimensional
GloVe 6B vectors (frequency order, 341,479 of the 400,000 tokens). Each entry
is stored as `[x_0 .. x_99, l2_norm, word_index]`; the trailing two columns
are dropped here.
"""

import argparse
import json
import sys


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("bundle", help="path to wink-embeddings-sg-100d.json")
    parser.add_argument("output", help="GloVe text file to write")
    args = parser.parse_args()

    with open(args.bundle, encoding="utf-8") as f:
        bundle = json.load(f)
    dims = bundle["dimensions"]
    vectors = bundle["vectors"]
    written = 0
    with open(args.output, "w", encoding="utf-8", newline="\n") as out:
        for word in bundle["words"]:
            row = vectors.get(word)
            if row is None or any(c.isspace() for c in word):
                continue
            out.write(word)
            for x in row[:dims]:
                out.write(" ")
                out.write(repr(float(x)) if not float(x).is_integer() else str(int(x)))
            out.write("\n")
            written += 1
    print(f"wrote {written} rows x {dims} dims to {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
