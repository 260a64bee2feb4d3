"""Brute-force reference implementations used as independent test oracles.

Everything here works on plain Python lists of ``(src, dst)`` pairs and
``collections.Counter``; nothing touches the numpy code paths under test.
"""

from collections import Counter
from fractions import Fraction


def pair_counts(pairs):
    return Counter(pairs)


def degree_vectors(pairs):
    links = Counter(pairs)
    return {
        "source_packets": dict(Counter(s for s, _ in pairs)),
        "source_fanout": dict(Counter(s for s, _ in links)),
        "destination_packets": dict(Counter(d for _, d in pairs)),
        "destination_fanin": dict(Counter(d for _, d in links)),
        "link_packets": dict(links),
    }


def summary(pairs, window_size=None):
    dv = degree_vectors(pairs)

    def mx(d):
        return max(d.values(), default=0)

    n = len(pairs)
    return {
        "window_size": n if window_size is None else window_size,
        "valid_packets": n,
        "unique_links": len(dv["link_packets"]),
        "max_link_packets": mx(dv["link_packets"]),
        "unique_sources": len(dv["source_packets"]),
        "max_source_packets": mx(dv["source_packets"]),
        "max_source_fanout": mx(dv["source_fanout"]),
        "unique_destinations": len(dv["destination_packets"]),
        "max_destination_packets": mx(dv["destination_packets"]),
        "max_destination_fanin": mx(dv["destination_fanin"]),
    }


def histogram(values):
    return dict(sorted(Counter(values).items()))


def binned_exact(values):
    """Exact rational bin masses: bin i collects degrees in (2**(i-1), 2**i]."""
    hist = histogram(values)
    n = sum(hist.values())
    d_max = max(hist)
    n_bins = 1
    while (1 << (n_bins - 1)) < d_max:
        n_bins += 1
    out = []
    for i in range(n_bins):
        lo = 1 if i == 0 else (1 << (i - 1)) + 1
        hi = 1 << i
        out.append(sum((Fraction(c, n) for d, c in hist.items() if lo <= d <= hi), Fraction(0)))
    return out


def binned_float_per_degree(values):
    """Per-degree float probabilities summed over each bin, in degree order."""
    hist = histogram(values)
    n = sum(hist.values())
    p = {d: c / n for d, c in hist.items()}
    out = {}
    for d, pd in p.items():
        i = (d - 1).bit_length()
        out[i] = out.get(i, 0.0) + pd
    return [out.get(i, 0.0) for i in range(max(out) + 1)]
