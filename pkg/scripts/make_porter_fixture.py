"""Regenerate tests/data/porter_vocabulary.tsv.

Needs ``nltk`` and ``english-words`` (not package dependencies). The stems come
from NLTK's Porter stemmer in MARTIN_EXTENSIONS mode, which NLTK validates
against the reference voc.txt/output.txt pair.
"""

import random
from pathlib import Path

from english_words import get_english_words_set
from nltk.stem.porter import PorterStemmer

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "porter_vocabulary.tsv"
EXTRA = ["caresses", "ponies", "ties", "caress", "cats", "feed", "agreed", "plastered",
         "motoring", "sing", "conflated", "troubled", "sized", "hopping", "tanned",
         "falling", "hissing", "fizzed", "failing", "filing", "happy", "sky",
         "relational", "conditional", "rational", "valenci", "hesitanci", "digitizer",
         "conformabli", "radicalli", "differentli", "vileli", "analogousli",
         "vietnamization", "predication", "operator", "feudalism", "decisiveness",
         "hopefulness", "callousness", "formaliti", "sensitiviti", "sensibiliti",
         "triplicate", "formative", "formalize", "electriciti", "electrical",
         "hopeful", "goodness", "revival", "allowance", "inference", "airliner",
         "gyroscopic", "adjustable", "defensible", "irritant", "replacement",
         "adjustment", "dependent", "adoption", "homologou", "communism", "activate",
         "angulariti", "homologous", "effective", "bowdlerize", "probate", "rate",
         "cease", "controll", "roll", "running", "runners", "run", "sports", "check"]


def main() -> None:
    words = sorted(get_english_words_set(["web2"], lower=True, alpha=True))
    sample = sorted(set(random.Random(1980).sample(words, 25000)) | set(EXTRA))
    stemmer = PorterStemmer(mode=PorterStemmer.MARTIN_EXTENSIONS)
    with OUT.open("w") as fh:
        for w in sample:
            fh.write(f"{w}\t{stemmer.stem(w)}\n")
    print(f"wrote {len(sample)} pairs to {OUT}")


if __name__ == "__main__":
    main()
