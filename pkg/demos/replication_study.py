"""Small Monte Carlo replication study over the three weight settings.

Runs the benchmark driver on the homoscedastic case with a reduced
replication count and compares mean optimal-treatment identification
accuracy (OTIA) across c = (0,0), (1,1) and (-1,1).  The full-size
protocol (n = 200, R = 100, n_test = 1000) is what the acceptance tests
run; this demo keeps R small so it finishes in a couple of minutes.

The same study is available from the command line:

    survitr simulate --set scenario=case1 --set R=10 --out out/
"""

import pathlib

from survitr.data import WeightConfig
from survitr.simulation import ScenarioSpec, run_replications, with_calibrated_tau

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

R = 10


def main():
    spec = with_calibrated_tau(ScenarioSpec(tag="case1", n=200))
    for c in [(0.0, 0.0), (1.0, 1.0), (-1.0, 1.0)]:
        report = run_replications(spec, WeightConfig(*c), R=R, n_test=1000)
        print(f"c=({c[0]:g},{c[1]:g}): mean OTIA = {report.mean_otia:.4f}")
        csv_path = OUT / f"replication_c{c[0]:g}_{c[1]:g}.csv"
        report.to_csv(csv_path)
        print(f"  per-replication report written to {csv_path}")


if __name__ == "__main__":
    main()
