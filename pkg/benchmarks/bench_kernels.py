#!/usr/bin/env python3
"""Compare the compiled kernel extension against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [size ...]
"""

import sys

from pointchat.kernels.bench import main

if __name__ == "__main__":
    sizes = tuple(int(a) for a in sys.argv[1:]) or (128, 256, 512)
    main(sizes=sizes)
