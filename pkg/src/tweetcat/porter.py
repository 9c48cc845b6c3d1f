"""Porter stemmer, following the behaviour of Martin Porter's reference C release.

The reference release differs from the 1980 description in two step-2 rules
(``bli -> ble`` instead of ``abli -> able``, and the extra ``logi -> log``).
Those two rules are what the published ``voc.txt``/``output.txt`` vocabulary
pair encodes, so they are the default here. ``original=True`` restores the
1980 rules.
"""

from __future__ import annotations

__all__ = ["PorterStemmer", "stem"]

_VOWELS = frozenset("aeiou")


class _Word:
    """Mutable buffer with the index bookkeeping the algorithm is phrased in."""

    __slots__ = ("b", "k", "j")

    def __init__(self, word: str) -> None:
        self.b = list(word)
        self.k = len(word) - 1
        self.j = 0

    def cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in _VOWELS:
            return False
        if ch == "y":
            return True if i == 0 else not self.cons(i - 1)
        return True

    def m(self) -> int:
        """Number of VC sequences in b[0..j]."""
        n = 0
        i = 0
        j = self.j
        while True:
            if i > j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self) -> bool:
        return any(not self.cons(i) for i in range(self.j + 1))

    def doublec(self, i: int) -> bool:
        if i < 1 or self.b[i] != self.b[i - 1]:
            return False
        return self.cons(i)

    def cvc(self, i: int) -> bool:
        if i < 2 or not self.cons(i) or self.cons(i - 1) or not self.cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def ends(self, s: str) -> bool:
        n = len(s)
        if n > self.k + 1:
            return False
        if "".join(self.b[self.k - n + 1 : self.k + 1]) != s:
            return False
        self.j = self.k - n
        return True

    def setto(self, s: str) -> None:
        j = self.j
        self.b[j + 1 : self.k + 1] = list(s)
        self.k = j + len(s)

    def r(self, s: str) -> None:
        if self.m() > 0:
            self.setto(s)

    def text(self) -> str:
        return "".join(self.b[: self.k + 1])


class PorterStemmer:
    def __init__(self, original: bool = False) -> None:
        self.original = original
        # (last-but-one char) -> ordered (suffix, replacement); first suffix match wins
        self._step2 = {
            "a": (("ational", "ate"), ("tional", "tion")),
            "c": (("enci", "ence"), ("anci", "ance")),
            "e": (("izer", "ize"),),
            "l": (
                ("abli" if original else "bli", "able" if original else "ble"),
                ("alli", "al"),
                ("entli", "ent"),
                ("eli", "e"),
                ("ousli", "ous"),
            ),
            "o": (("ization", "ize"), ("ation", "ate"), ("ator", "ate")),
            "s": (("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous")),
            "t": (("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")),
        }
        if not original:
            self._step2["g"] = (("logi", "log"),)

    def stem(self, word: str) -> str:
        if len(word) <= 2:
            return word
        w = _Word(word)
        self._step1ab(w)
        if w.k > 0:
            self._step1c(w)
            self._step2_apply(w)
            self._step3(w)
            self._step4(w)
            self._step5(w)
        return w.text()

    __call__ = stem

    def _step1ab(self, w: _Word) -> None:
        if w.b[w.k] == "s":
            if w.ends("sses"):
                w.k -= 2
            elif w.ends("ies"):
                w.setto("i")
            elif w.b[w.k - 1] != "s":
                w.k -= 1
        if w.ends("eed"):
            if w.m() > 0:
                w.k -= 1
        elif (w.ends("ed") or w.ends("ing")) and w.vowel_in_stem():
            w.k = w.j
            if w.ends("at"):
                w.setto("ate")
            elif w.ends("bl"):
                w.setto("ble")
            elif w.ends("iz"):
                w.setto("ize")
            elif w.doublec(w.k):
                w.k -= 1
                if w.b[w.k] in "lsz":
                    w.k += 1
            elif w.m() == 1 and w.cvc(w.k):
                w.setto("e")

    def _step1c(self, w: _Word) -> None:
        if w.ends("y") and w.vowel_in_stem():
            w.b[w.k] = "i"

    def _step2_apply(self, w: _Word) -> None:
        for suffix, repl in self._step2.get(w.b[w.k - 1], ()):
            if w.ends(suffix):
                w.r(repl)
                return

    def _step3(self, w: _Word) -> None:
        table = {
            "e": (("icate", "ic"), ("ative", ""), ("alize", "al")),
            "i": (("iciti", "ic"),),
            "l": (("ical", "ic"), ("ful", "")),
            "s": (("ness", ""),),
        }
        for suffix, repl in table.get(w.b[w.k], ()):
            if w.ends(suffix):
                w.r(repl)
                return

    def _step4(self, w: _Word) -> None:
        ch = w.b[w.k - 1]
        if ch == "o":
            if w.ends("ion") and w.j >= 0 and w.b[w.j] in "st":
                pass
            elif not w.ends("ou"):
                return
        else:
            suffixes = _STEP4.get(ch)
            if suffixes is None:
                return
            for suffix in suffixes:
                if w.ends(suffix):
                    break
            else:
                return
        if w.m() > 1:
            w.k = w.j

    def _step5(self, w: _Word) -> None:
        w.j = w.k
        if w.b[w.k] == "e":
            a = w.m()
            if a > 1 or (a == 1 and not w.cvc(w.k - 1)):
                w.k -= 1
        if w.b[w.k] == "l" and w.doublec(w.k) and w.m() > 1:
            w.k -= 1


_STEP4 = {
    "a": ("al",),
    "c": ("ance", "ence"),
    "e": ("er",),
    "i": ("ic",),
    "l": ("able", "ible"),
    "n": ("ant", "ement", "ment", "ent"),
    "s": ("ism",),
    "t": ("ate", "iti"),
    "u": ("ous",),
    "v": ("ive",),
    "z": ("ize",),
}

_DEFAULT = PorterStemmer()


def stem(token: str) -> str:
    """Stem one lowercase token."""
    return _DEFAULT.stem(token)
