#!/usr/bin/env python3
"""End-to-end checks of the sgarch command line tool.

usage: test_cli.py <sgarch binary> <schemas dir> <scratch dir>
"""
import json
import pathlib
import subprocess
import sys
import unittest

import jsonschema

BIN = None
SCHEMAS = None
SCRATCH = None


def run(*args, check=True):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, timeout=1200)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def validate(name, text):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    doc = json.loads(text)
    jsonschema.Draft202012Validator.check_schema(schema)
    jsonschema.validate(doc, schema, cls=jsonschema.Draft202012Validator)
    return doc


class Cli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.data = SCRATCH / "cli_series.csv"
        run("simulate", "--experiment", "series", "--dgp", "dgp2", "--tau", "linear", "--T", 1500,
            "--reps", 1, "--seed", 3, "--format", "csv", "--out", cls.data)

    def test_exit_codes(self):
        self.assertEqual(run("fit", SCRATCH / "does_not_exist.csv", check=False).returncode, 2)
        self.assertEqual(run("fit", self.data, "--no-such-flag", check=False).returncode, 2)
        self.assertEqual(run("no-such-command", check=False).returncode, 2)
        self.assertEqual(run("fit", self.data, "--column", "nope", check=False).returncode, 2)
        self.assertEqual(run("simulate", "--dgp", "dgp9", check=False).returncode, 2)

    def test_help_lists_flags(self):
        flags = {
            "fit": ["--order", "--bandwidth", "--boundary", "--out"],
            "lm-test": ["--R", "--r", "--order"],
            "check": ["--lags"],
            "bandwidth": ["--pilot-order"],
            "simulate": ["--dgp", "--k", "--tau", "--dist", "--T", "--reps", "--seed", "--experiment"],
            "forecast": ["--models", "--t0", "--origin-start"],
            "compare-estimators": ["--order"],
        }
        for cmd, expected in flags.items():
            out = run(cmd, "--help").stdout
            for flag in expected:
                self.assertIn(flag, out, f"{cmd} --help")

    def test_simulate_deterministic(self):
        args = ["simulate", "--dgp", "dgp2", "--tau", "constant", "--dist", "normal", "--T", 2000,
                "--reps", 2, "--seed", 7]
        a, b = run(*args).stdout, run(*args).stdout
        self.assertTrue(a)
        self.assertEqual(a, b)
        c = run("--threads", 2, *args).stdout
        self.assertEqual(a, c)

    def test_fit_schema(self):
        doc = validate("fit", run("fit", self.data, "--column", "y", "--bandwidth", 0.15).stdout)
        self.assertEqual(len(doc["theta"]), 2)
        self.assertTrue(doc["converged"])

    def test_lm_schema(self):
        doc = validate("lm-test", run("lm-test", self.data, "--column", "y", "--bandwidth", 0.15,
                                      "--order", 1, 2, "--R", "0,0,1", "--r", "0").stdout)
        self.assertEqual(doc["df"], 1)

    def test_check_schema(self):
        doc = validate("check", run("check", self.data, "--column", "y", "--bandwidth", 0.15,
                                    "--lags", "6,9").stdout)
        self.assertEqual([t["lag"] for t in doc["tests"]], [6, 9])

    def test_bandwidth_schema(self):
        doc = validate("bandwidth", run("bandwidth", self.data, "--column", "y", "--format", "json").stdout)
        self.assertIn(doc["h_cv"], [p["h"] for p in doc["curve"]])
        csv = run("bandwidth", self.data, "--column", "y").stdout.splitlines()
        self.assertEqual(csv[0], "h,cv,selected")

    def test_compare_schema(self):
        validate("compare-estimators", run("compare-estimators", self.data, "--column", "y",
                                           "--bandwidth", 0.15).stdout)

    def test_simulate_schemas(self):
        common = ["--tau", "constant", "--dist", "normal", "--T", 800, "--reps", 2, "--seed", 11,
                  "--bandwidth", 0.2, "--format", "json"]
        doc = validate("simulate", run("simulate", "--experiment", "table", "--dgp", "dgp2", "--vt",
                                       *common).stdout)
        self.assertEqual(doc["experiment"], "table")
        doc = validate("simulate", run("simulate", "--experiment", "power", "--dgp", "dgp3",
                                       "--k-set", "0,10", "--lags", "6", *common).stdout)
        self.assertEqual([r["k"] for r in doc["rows"]], [0, 10])
        doc = validate("simulate", run("simulate", "--experiment", "series", "--dgp", "dgp2",
                                       *common).stdout)
        self.assertEqual(len(doc["paths"]), 2)

    def test_forecast_schema(self):
        doc = validate("forecast", run("forecast", self.data, "--column", "y", "--origin-start", 1400,
                                       "--origin-stride", 20, "--t0", "1,5", "--bandwidth", 0.15,
                                       "--format", "json").stdout)
        self.assertEqual(doc["horizons"], [1, 5])
        self.assertEqual(sum(h["best"] for m in doc["models"] for h in m["horizons"] if h["t0"] == 1), 1)


if __name__ == "__main__":
    BIN = sys.argv[1]
    SCHEMAS = pathlib.Path(sys.argv[2])
    SCRATCH = pathlib.Path(sys.argv[3])
    SCRATCH.mkdir(parents=True, exist_ok=True)
    unittest.main(argv=sys.argv[:1], verbosity=2)
