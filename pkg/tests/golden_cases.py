"""CLI invocations whose outputs are pinned under ``tests/golden``.

Run ``python3 tests/golden_cases.py`` to rebuild the input files and the
golden outputs after an intentional change.
"""

import contextlib
import io
import shutil
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"

# {out} is replaced by the case's output directory
CASES = {
    "fit": ["fit", "--x", "{data}/x.csv", "--y", "{data}/y.csv", "--header", "--tau", "0.3",
            "--lambda", "0.01", "--epsilon", "1e-3", "--max-iters", "3000", "--loss-tol", "0",
            "--out", "{out}/model.json", "--quantiles", "{out}/quantiles.csv"],
    "fit_pivotal": ["fit", "--x", "{data}/x.csv", "--y", "{data}/y.csv", "--header", "--tau", "0.5",
                    "--n-sim", "50", "--seed", "3", "--multiplier", "0.5", "--max-iters", "500",
                    "--out", "{out}/model.json"],
    "tune": ["tune", "--x", "{data}/x.csv", "--header", "--m", "2", "--tau", "0.1", "--n-sim", "50",
             "--seed", "11", "--draws", "{out}/draws.csv"],
    "simulate": ["simulate", "--model", "ES", "--n", "20", "--p", "5", "--m", "4", "--reps", "2",
                 "--taus", "0.2,0.5", "--lambdas", "0.001,pivotal", "--max-iters", "50",
                 "--n-sim", "20", "--seed", "5", "--no-timing", "--threads", "2",
                 "--out", "{out}/results.csv", "--long", "{out}/long.csv"],
    "factorize": ["factorize", "--model", "{golden}/fit/model.json", "--x", "{data}/x.csv", "--header",
                  "--components", "2", "--out-dir", "{out}"],
    "curves": ["curves", "--data", "{data}/curves.csv", "--header", "--tau", "0.5", "--lambda", "1e-4",
               "--max-iters", "2000", "--grid", "21", "--detrend", "--out-dir", "{out}"],
    "samcvar": ["samcvar", "--data", "{data}/prices.csv", "--input", "prices", "--tau", "0.05",
                "--n-sim", "20", "--seed", "2", "--max-iters", "300", "--intercept", "--out-dir", "{out}"],
}


def argv(case, out):
    return [a.format(data=DATA, golden=GOLDEN, out=out) for a in CASES[case]]


def run_case(case, out):
    """Run one case into ``out``; returns ``(exit_code, stdout)`` and writes stdout.txt."""
    from fastec.cli import main

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv(case, out))
    (out / "stdout.txt").write_text(buf.getvalue().replace(str(out), "{out}"), encoding="utf-8")
    return code, buf.getvalue()


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def make_data():
    DATA.mkdir(exist_ok=True)
    r = np.random.default_rng(2024)
    n, p = 24, 3
    X = np.round(r.standard_normal((n, p)), 4)
    G = np.array([[1.0, 0.5], [-0.5, -0.25], [0.2, 0.1]])
    Y = np.round(X @ G + 0.3 * r.standard_normal((n, 2)), 4)
    write_csv(DATA / "x.csv", ["x1", "x2", "x3"], X.tolist())
    write_csv(DATA / "y.csv", ["y1", "y2"], Y.tolist())

    t = np.round(np.linspace(0.0, 1.0, 40), 6)
    curve = np.sin(np.pi * t)
    C = np.round(np.outer(curve, [1.0, 2.0, -1.0]) + 0.05 * r.standard_normal((40, 3)) + 0.5 * t[:, None], 5)
    write_csv(DATA / "curves.csv", ["t", "s1", "s2", "s3"], [[a] + list(b) for a, b in zip(t, C.tolist())])

    T, m = 41, 4
    steps = 0.02 * r.standard_normal((T - 1, m))
    P = np.round(100.0 * np.exp(np.vstack([np.zeros(m), np.cumsum(steps, axis=0)])), 4)
    dates = [f"2020-01-{d:02d}" if d <= 31 else f"2020-02-{d - 31:02d}" for d in range(1, T + 1)]
    write_csv(DATA / "prices.csv", ["date", "A", "B", "C", "D"], [[d] + list(row) for d, row in zip(dates, P.tolist())])
    R = np.diff(np.log(P), axis=0)
    write_csv(DATA / "returns.csv", ["date", "A", "B", "C", "D"],
              [[d] + [format(v, ".17g") for v in row] for d, row in zip(dates[1:], R.tolist())])


def rebuild():
    make_data()
    for case in CASES:
        target = GOLDEN / case
        if target.exists():
            shutil.rmtree(target)
        code, _ = run_case(case, target)
        if code != 0:
            sys.exit(f"{case} exited with {code}")


if __name__ == "__main__":
    sys.path.insert(0, str(HERE.parent / "src"))
    rebuild()
