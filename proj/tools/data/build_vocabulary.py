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
"""Builds a context-free POS lexicon and a category-balanced sub-vocabulary.

Every token of a GloVe text file is assigned at most one universal POS
category, without context:

  1. tokens made only of punctuation characters -> PUNCTUATION
  2. numeric tokens, cardinal number words and their hyphenated compounds
     -> NUMERAL
  3. the first (most frequent) tag of the Brill lexicon, mapped from Penn
     Treebank to the universal tagset
  4. otherwise the WordNet part of speech with the largest tagged-sense count
  5. otherwise alphabetic tokens ending in "-ly" -> ADVERB

Tokens that end up in the universal "X" class (FW, LS, SYM, UH) or that no
source knows are left untagged.

The sub-vocabulary keeps, per category, the most frequent tokens (GloVe row
order) up to the per-category quota.

Outputs (in --out-dir):
  lexicon.tsv        token<TAB>TAG for every tagged token of the embeddings
  vocabulary.txt     one token per line, the selected sub-vocabulary
  vocabulary.100d.txt  GloVe rows of the sub-vocabulary, original order
  vocabulary.json    per-category quotas and achieved counts
"""

import argparse
import json
import os
import re
import sys

PENN_TO_UNIVERSAL = {
    "CC": "CONJUNCTION",
    "CD": "NUMERAL",
    "DT": "DETERMINER", "EX": "DETERMINER", "PDT": "DETERMINER",
    "WDT": "DETERMINER",
    "IN": "ADPOSITION",
    "JJ": "ADJECTIVE", "JJR": "ADJECTIVE", "JJS": "ADJECTIVE",
    "MD": "VERB", "VB": "VERB", "VBD": "VERB", "VBG": "VERB", "VBN": "VERB",
    "VBP": "VERB", "VBZ": "VERB",
    "NN": "NOUN", "NNS": "NOUN", "NNP": "NOUN", "NNPS": "NOUN", "NP": "NOUN",
    "POS": "PARTICLE", "RP": "PARTICLE", "TO": "PARTICLE",
    "PRP": "PRONOUN", "PRP$": "PRONOUN", "WP": "PRONOUN", "WP$": "PRONOUN",
    "RB": "ADVERB", "RBR": "ADVERB", "RBS": "ADVERB", "WRB": "ADVERB",
    "FW": "X", "LS": "X", "SYM": "X", "UH": "X",
}

WORDNET_TO_UNIVERSAL = {
    "noun": "NOUN", "verb": "VERB", "adj": "ADJECTIVE", "adv": "ADVERB",
}

# Ordered as listed for the reference vocabulary.
QUOTAS = {
    "PRONOUN": 26,
    "NOUN": 5000,
    "VERB": 5000,
    "ADJECTIVE": 5000,
    "ADVERB": 4341,
    "ADPOSITION": 92,
    "NUMERAL": 5000,
    "CONJUNCTION": 6,
    "PARTICLE": 2,
    "DETERMINER": 39,
    "PUNCTUATION": 19,
}

NUMBER_WORDS = set("""
zero one two three four five six seven eight nine ten eleven twelve thirteen
fourteen fifteen sixteen seventeen eighteen nineteen twenty thirty forty fifty
sixty seventy eighty ninety hundred thousand million billion trillion dozen
""".split())

NUMERIC = re.compile(r"^[+-]?(\d+([.,:/-]\d+)*|\.\d+)$")
NUMBER_COMPOUND = re.compile(r"^[a-z]+(-[a-z]+)+$")
ADVERB_SUFFIX = re.compile(r"^[a-z]{3,}ly$")
PUNCT_ONLY = re.compile(r"^[^\w\s]+$", re.UNICODE)


def load_brill(path):
    """Reads the Brill lexicon as shipped by the `pos` npm package."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if path.endswith(".js"):
        text = re.sub(r"^.*?module\.exports\s*=\s*", "", text, flags=re.S)
        text = text.strip().rstrip(";")
        text = text.replace("\\'", "'")
    return json.loads(text)


def load_wordnet(dict_dir):
    """Returns lemma -> universal tag using the largest tagsense_cnt."""
    best = {}
    for name, tag in WORDNET_TO_UNIVERSAL.items():
        with open(os.path.join(dict_dir, "index." + name), encoding="utf-8") as f:
            for line in f:
                if line.startswith(" "):
                    continue
                fields = line.split()
                lemma = fields[0]
                if "_" in lemma:
                    continue
                synset_cnt = int(fields[2])
                p_cnt = int(fields[3])
                tagsense_cnt = int(fields[5 + p_cnt])
                score = (tagsense_cnt, synset_cnt)
                if lemma not in best or score > best[lemma][0]:
                    best[lemma] = (score, tag)
    return {lemma: tag for lemma, (_, tag) in best.items()}


def brill_tag(brill, token):
    for key in (token, token.capitalize(), token.upper()):
        tags = brill.get(key)
        if tags:
            first = tags[0].split("|")[0]
            if first in PENN_TO_UNIVERSAL:
                return PENN_TO_UNIVERSAL[first]
            if PUNCT_ONLY.match(first) or first in ("``", "''"):
                return "PUNCTUATION"
            return None
    return None


def tag_token(token, brill, wordnet):
    if PUNCT_ONLY.match(token):
        return "PUNCTUATION"
    if NUMERIC.match(token) or token in NUMBER_WORDS:
        return "NUMERAL"
    if NUMBER_COMPOUND.match(token) and all(p in NUMBER_WORDS for p in token.split("-")):
        return "NUMERAL"
    tag = brill_tag(brill, token)
    if tag is None and token in wordnet:
        tag = wordnet[token]
    if tag is None and ADVERB_SUFFIX.match(token):
        tag = "ADVERB"
    if tag == "X":
        return None
    return tag


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--embeddings", required=True, help="GloVe text file")
    parser.add_argument("--brill", required=True, help="Brill lexicon (.js or .json)")
    parser.add_argument("--wordnet", required=True, help="WordNet dict/ directory")
    parser.add_argument("--out-dir", required=True)
    args = parser.parse_args()

    brill = load_brill(args.brill)
    wordnet = load_wordnet(args.wordnet)
    os.makedirs(args.out_dir, exist_ok=True)

    counts = {tag: 0 for tag in QUOTAS}
    selected_rows = []
    selected_words = []
    lexicon_lines = []
    with open(args.embeddings, encoding="utf-8") as f:
        for line in f:
            token = line.split(" ", 1)[0]
            tag = tag_token(token, brill, wordnet)
            if tag is None:
                continue
            lexicon_lines.append(f"{token}\t{tag}\n")
            if counts[tag] < QUOTAS[tag]:
                counts[tag] += 1
                selected_words.append(token)
                selected_rows.append(line)

    with open(os.path.join(args.out_dir, "lexicon.tsv"), "w", encoding="utf-8") as f:
        f.writelines(lexicon_lines)
    with open(os.path.join(args.out_dir, "vocabulary.txt"), "w", encoding="utf-8") as f:
        f.writelines(w + "\n" for w in selected_words)
    with open(os.path.join(args.out_dir, "vocabulary.100d.txt"), "w", encoding="utf-8") as f:
        f.writelines(selected_rows)
    with open(os.path.join(args.out_dir, "vocabulary.json"), "w", encoding="utf-8") as f:
        json.dump({"quotas": QUOTAS, "counts": counts, "size": len(selected_words),
                   "lexicon_entries": len(lexicon_lines)}, f, indent=2)
        f.write("\n")

    for tag in QUOTAS:
        print(f"{tag:12s} {counts[tag]:6d} / {QUOTAS[tag]}", file=sys.stderr)
    print(f"vocabulary size {len(selected_words)}; lexicon entries {len(lexicon_lines)}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
