"""Calibration run: one DG seed and one GDA seed, dense logging.

Writes CSV logs under /tmp/mog_calibration for inspecting when mode
coverage, the dg-metric drop, and the discriminator median stabilize.
"""

import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dgopt.mog import train_mog  # noqa: E402

OUT = "/tmp/mog_calibration"


def main():
    os.makedirs(OUT, exist_ok=True)
    for alg, iters, interval in (("gda", 20000, 200), ("dg", 20000, 200)):
        t0 = time.time()
        log = train_mog(alg, seed=1, iterations=iters, log_interval=interval,
                        dtype=np.float32)
        dt = time.time() - t0
        log.write_csv(f"{OUT}/{alg}_seed1.csv")
        log.write_samples_csv(f"{OUT}/{alg}_seed1_samples.csv")
        last = log.rows[-1]
        print(f"{alg}: status={log.status} wall={dt:.0f}s "
              f"final value={last[1]:.4f} dg={last[4]:.4f} "
              f"fracs=({last[5]:.3f},{last[6]:.3f},{last[7]:.3f}) "
              f"disc=({last[8]:.3f},{last[9]:.3f})", flush=True)


if __name__ == "__main__":
    main()
