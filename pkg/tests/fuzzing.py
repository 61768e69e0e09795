"""Single-coefficient mutations of serialized certificates."""
import random
import re
from fractions import Fraction

from odeinv.proofcert import TERM_KEYS, CertificateFormatError, check_certificate

# a rational literal that is not an exponent, a variable suffix or part of a decimal
NUMBER = re.compile(r"(?<![\w^./])(\d+(?:/\d+)?)(?![\w/])")


def sites(text: str) -> list:
    """``(line, start, end)`` of every numeric literal in witness data inside a block."""
    out = []
    level = 0
    for i, line in enumerate(text.split("\n")):
        s = line.strip()
        if s.startswith("begin "):
            level += 1
            continue
        if s == "end":
            level -= 1
            continue
        if level == 0 or " = " not in s:
            continue
        key = s.split(" = ", 1)[0].split("[")[0]
        if key not in TERM_KEYS:
            continue
        off = line.index(" = ") + 3
        for m in NUMBER.finditer(line[off:]):
            out.append((i, off + m.start(1), off + m.end(1)))
    return out


def mutate(text: str, site) -> str:
    """Add one to the literal at ``site``."""
    lines = text.split("\n")
    i, a, b = site
    lines[i] = lines[i][:a] + str(Fraction(lines[i][a:b]) + 1) + lines[i][b:]
    return "\n".join(lines)


def accepted_mutants(text: str, n: int = 100, seed: int = 0) -> tuple:
    """Apply ``n`` mutations; return (number of sites, mutants the checker accepted)."""
    ss = sites(text)
    rng = random.Random(seed)
    picks = list(ss) if len(ss) <= n else rng.sample(ss, n)
    while len(picks) < n:
        picks.append(rng.choice(ss))
    accepted = []
    for site in picks:
        mutant = mutate(text, site)
        try:
            result = check_certificate(mutant)
        except CertificateFormatError:
            continue
        if result.ok:
            accepted.append(mutant.split("\n")[site[0]])
    return len(ss), accepted
