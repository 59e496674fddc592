"""Reference SplitMix64 -> xoshiro256** streams, written without the C++ code."""

import sys

M = (1 << 64) - 1


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


def splitmix(seed):
    state = seed & M
    while True:
        state = (state + 0x9E3779B97F4A7C15) & M
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        yield z ^ (z >> 31)


def xoshiro(s):
    s = list(s)
    while True:
        result = (rotl((s[1] * 5) & M, 7) * 9) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


def derive(master, index):
    g = splitmix(master ^ ((index * 0x9E3779B97F4A7C15) & M))
    return xoshiro([next(g) for _ in range(4)])


def main(out):
    with open(out, "w") as f:
        f.write("# master index first eight outputs\n")
        for master, index in [(0, 0), (42, 0), (42, 7), (0xDEADBEEF, 123456789)]:
            g = derive(master, index)
            f.write(" ".join(str(v) for v in [master, index] + [next(g) for _ in range(8)]) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
