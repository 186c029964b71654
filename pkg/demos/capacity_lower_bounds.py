"""Multi-letter Holevo values of a random qubit channel.

    python demos/capacity_lower_bounds.py
"""

import numpy as np

from cqcoding import memoryless, multi_letter_lower_bound
from cqcoding.random_ops import random_density


def main(seed: int = 0):
    rng = np.random.default_rng(seed)
    ch = memoryless([random_density(2, rng) for _ in range(2)])
    for row in multi_letter_lower_bound(ch, [1, 2, 3]):
        print(f"n={row['n']}  C_n/n={row['per_site']:.6f}  running max={row['lower_bound']:.6f}")


if __name__ == "__main__":
    main()
