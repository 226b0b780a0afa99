"""End-to-end checks of the supousv command-line tool.

Usage: cli_e2e.py <supousv binary> <schemas dir> <fixtures dir> <work dir>
"""

import filecmp
import json
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

BIN, SCHEMAS, FIXTURES, WORK = (Path(a) for a in sys.argv[1:5])
MODEL = FIXTURES / "tn_model.cfg"
failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(*args, env=None, expect=0):
    p = subprocess.run([str(BIN), "-q", *map(str, args)], capture_output=True, text=True, env=env)
    if p.returncode != expect:
        print(p.stdout, p.stderr, sep="\n")
    check(p.returncode == expect, f"exit {expect}: {' '.join(map(str, args[:4]))}")
    return p


def validate(path, schema):
    doc = json.loads(path.read_text())
    s = json.loads((SCHEMAS / f"{schema}.schema.json").read_text())
    try:
        jsonschema.validate(doc, s)
        check(True, f"{path.name} matches {schema} schema")
    except jsonschema.ValidationError as e:
        check(False, f"{path.name} matches {schema} schema: {e.message}")
    return doc


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)
gen, out = WORK / "gen", WORK / "out"

# Fixture: 20 years after a 20-year burn-in, hourly-ish discharge, weekly WQI.
run("--out", gen, "simulate", "--config", MODEL, "--years", 20, "--burn-in-years", 20, "--nodes", 128,
    "--sample-every", 0.04, "--wqi-every", 7)
for name in ("path.csv", "discharge.csv", "wqi.csv", "cd_events.json"):
    check((gen / name).exists(), f"simulate wrote {name}")
cd = validate(gen / "cd_events.json", "cd_events")
check(cd["counts"]["clockwise"] > 0 and cd["counts"]["counterclockwise"] > 0, "both loop directions occur")

common = ["--discharge", gen / "discharge.csv", "--wqi", gen / "wqi.csv", "--grid", 256, "--alpha-step", 0.05,
          "--stats-grid", 512]
run("--out", out, "run", *common, "--simulate-years", 2, "--nodes", 64, "--riccati-q", "0.05,0.1")
for name in ("fit_report.json", "stats.json", "acf_emp.csv", "acf_model.csv", "path.csv", "cd_events.json",
             "riccati.json", "model.cfg"):
    check((out / name).exists(), f"run wrote {name}")
rep = validate(out / "fit_report.json", "fit_report")
validate(out / "stats.json", "stats")
validate(out / "riccati.json", "riccati")
validate(out / "cd_events.json", "cd_events")
w = rep["wqi"]
check(w["coupled"], "coupled fit used")
check(math.isclose(w["variance_x_theory"], w["variance_x_empirical"], rel_tol=1e-8),
      "theoretical Var(X) equals the empirical variance")
check(math.copysign(1, rep["model"]["mu"]) == math.copysign(1, w["cov_xy_empirical"]), "sign(mu) = sign(cov)")
check(abs(rep["model"]["pi"]["alpha"] - 2.143) / 2.143 < 1.0, "alpha_r in the right range")
fit_header = (out / "acf_emp.csv").read_text().splitlines()[0]
check(fit_header == "series,lag,acf,pairs", "acf_emp.csv header")

# Reproducibility: identical inputs and seed give identical bytes.
out2 = WORK / "out2"
run("--out", out2, "run", *common, "--simulate-years", 2, "--nodes", 64, "--riccati-q", "0.05,0.1")
for name in sorted(os.listdir(out)):
    check(filecmp.cmp(out / name, out2 / name, shallow=False), f"{name} is byte-identical on rerun")

# The fitted flat config drives the other subcommands.
env = dict(os.environ, SUPOUSV_OUT_DIR=str(WORK / "envdir"))
run("stats", "--config", out / "model.cfg", "--grid", 256, env=env)
validate(WORK / "envdir" / "stats.json", "stats")

d_only = WORK / "donly"
run("--out", d_only, "run", "--discharge", gen / "discharge.csv", "--wqi", WORK / "missing.csv",
    "--discharge-only", expect=2)  # CLI11 rejects a path that does not exist
run("--out", d_only, "run", "--discharge", gen / "discharge.csv", "--discharge-only", "--stats-grid", 256)
drep = validate(d_only / "fit_report.json", "fit_report")
check(drep["wqi"] is None, "discharge-only run skips the WQI stages")

unc = WORK / "unc"
run("--out", unc, "fit-wqi", "--config", out / "model.cfg", "--discharge", gen / "discharge.csv", "--wqi",
    gen / "wqi.csv", "--uncoupled", "--grid", 256)
urep = validate(unc / "fit_report.json", "fit_report")
check(any("covariance mismatch" in s for s in urep["warnings"]), "forced uncoupled fit warns about covariance")
check(urep["model"]["mu"] == 0, "uncoupled fit has mu = 0")

fd = WORK / "fd"
run("--out", fd, "fit-discharge", "--discharge", gen / "discharge.csv")
validate(fd / "fit_report.json", "fit_report")

ing = WORK / "ing"
run("--out", ing, "ingest", "--input", gen / "wqi.csv", "--kind", "concentration")
validate(ing / "ingest.json", "ingest")
run("--out", ing, "acf", "--input", gen / "wqi.csv", "--kind", "concentration", "--max-lag", 70)
check((ing / "acf_emp.csv").read_text().splitlines()[1].startswith("concentration,0,1,"), "acf lag 0 is 1")

ric = WORK / "ric"
run("--out", ric, "riccati", "--config", MODEL, "--q", "0.05,0.2278", "--nodes", 64)
r = validate(ric / "riccati.json", "riccati")["results"]
check(r[0]["verdict"] == "finite" and r[1]["verdict"] == "divergent", "riccati verdicts below and above q_max")

cdd = WORK / "cd"
run("--out", cdd, "cdcurve", "--discharge", gen / "path.csv", "--discharge-column", "y", "--wqi", gen / "path.csv",
    "--wqi-column", "c")
validate(cdd / "cd_events.json", "cd_events")

sw = WORK / "sweep"
run("--out", sw, "sweep", "--discharge", gen / "discharge.csv", "--sweep", "eps=0,0.1,0.4")
rows = [list(map(float, l.split(","))) for l in (sw / "sweep_eps.csv").read_text().splitlines()[1:]]
check(len(rows) == 3 and rows[0][2] > rows[1][2] > rows[2][2], "a2 decreases along the eps sweep")

# Failure stages map to distinct exit codes.
bad = WORK / "bad.csv"
bad.write_text("time,value\n0,1\n1,oops\n")
p = run("--out", WORK / "e", "fit-discharge", "--discharge", bad, expect=3)
check('"stage":"input"' in p.stderr and "bad.csv:3" in p.stderr, "input error names the line")
badcfg = WORK / "bad.cfg"
badcfg.write_text("pi.alpha = 2\n")
run("--out", WORK / "e", "stats", "--config", badcfg, expect=2)
run("--out", WORK / "e", "run", "--discharge", gen / "discharge.csv", expect=2)
run("bogus-command", expect=2)
flat = WORK / "flat.csv"
flat.write_text("time,value\n" + "".join(f"{i},5\n" for i in range(50)))
run("--out", WORK / "e", "fit-discharge", "--discharge", flat, expect=4)

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
