"""cvswap - Command Line Interface

The `cli` module provides a command-line interface to the cvswap package. It
runs single swap-and-teleport configurations, sweeps the reference scenarios
over a squeezing range and executes the verification suite.

Squeezing is given as squeezing parameters or in decibels, detector
efficiencies as eta^2. Reports and tables go to standard output (or `--out`),
log messages to standard error.
"""

# pylint: disable=invalid-name,too-few-public-methods

import argparse
import contextlib
import json
import logging
import os
import sys

import pandas as pd
from jsonschema import ValidationError

from . import protocol, verify
from .configuration import Conf, flag_for


def _gain(value: str):
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got '{value}'") from None


def _document(args, names):
    return {name: getattr(args, name) for name in names if getattr(args, name) is not None}


def _invalid(error: ValidationError) -> int:
    flag = flag_for(error) or "arguments"
    print(f"Invalid {flag}: {error.message}", file=sys.stderr)
    return Cli.EXITCODE_INVALID_COMMAND


class CliSwap:
    """Swap Command"""

    def __init__(self, ctx):
        self._ctx = ctx

    def run(self):
        """Run swap command"""

        data = _document(self._ctx.args, ("r", "r2", "s", "s2", "db", "g_swap", "g", "eta_c_sq", "eta_a_sq"))
        try:
            conf = Conf.swap(data)
        except ValidationError as e:
            return _invalid(e)

        params = conf.swap_params()
        logging.info(f"Swapping with {params}")
        report = protocol.evaluate(params)

        output = report.as_dict()
        output["inseparable"] = report.inseparable
        print(json.dumps(output, indent=2, sort_keys=True))
        return 0


class CliSweep:
    """Sweep Command"""

    def __init__(self, ctx):
        self._ctx = ctx

    def run(self):
        """Run sweep command"""

        args = self._ctx.args
        data = _document(args, ("g_swap", "g", "eta_c_sq", "eta_a_sq"))
        data.update({
            "scenarios": args.scenario or [s.value for s in protocol.Scenario],
            "db_min": args.db_range[0],
            "db_max": args.db_range[1],
            "db_step": args.db_range[2],
            "format": args.format,
            "out": args.out,
        })
        try:
            conf = Conf.sweep(data)
        except ValidationError as e:
            return _invalid(e)

        rows = protocol.sweep(conf.options["scenarios"], conf.dbs(), conf.overrides())
        table = pd.DataFrame(rows, columns=protocol.SWEEP_COLUMNS)

        if conf.options["format"] == "json":
            text = table.to_json(orient="records", double_precision=15) + "\n"
        else:
            text = table.to_csv(index=False, float_format="%.15g")

        if conf.options["out"] is not None:
            with open(conf.options["out"], "w") as f:
                f.write(text)
            logging.info(f"Wrote {len(table)} rows to {conf.options['out']}")
        else:
            sys.stdout.write(text)
        return 0


class CliVerify:
    """Verify Command"""

    def __init__(self, ctx):
        self._ctx = ctx

    def run(self):
        """Run verify command"""

        verification = verify.Verification()
        checks = verification.run()
        for check in checks:
            print(check.line())

        failed = sum(not check.passed for check in checks)
        print(f"{len(checks) - failed}/{len(checks)} checks passed")
        return 0 if failed == 0 else Cli.EXITCODE_VERIFY_FAILED


class Cli(contextlib.AbstractContextManager):
    """cvswap Command Line Interface"""

    EXITCODE_VERIFY_FAILED = 1
    EXITCODE_INVALID_COMMAND = 2

    def __init__(self, argv):
        self.args = None
        self._argv = argv
        self._parser = None

    def _add_gain_flags(self, parser, gain_default):
        parser.add_argument(
            "--g-swap",
            default=gain_default,
            dest="g_swap",
            help="Gain of Bob's displacement after the swap, a number or 'auto'",
            metavar="GAIN",
            type=_gain,
        )
        parser.add_argument(
            "--g",
            help="Gain of the teleportation displacement (default 1)",
            metavar="GAIN",
            type=float,
        )
        parser.add_argument(
            "--eta-c-sq",
            dest="eta_c_sq",
            help="Efficiency eta^2 of Claire's detectors (default 1)",
            metavar="ETA2",
            type=float,
        )
        parser.add_argument(
            "--eta-a-sq",
            dest="eta_a_sq",
            help="Efficiency eta^2 of Alice's detectors (default 1)",
            metavar="ETA2",
            type=float,
        )

    def _parse_args(self):
        self._parser = argparse.ArgumentParser(
            add_help=True,
            allow_abbrev=False,
            argument_default=None,
            description="Continuous-Variable Entanglement Swapping",
            prog="cvswap",
        )
        self._parser.add_argument(
            "--verbose",
            action="store_true",
            default=False,
            help="Log debug messages",
        )

        cmd = self._parser.add_subparsers(
            dest="cmd",
            title="cvswap Commands",
        )

        _cmd_swap = cmd.add_parser(
            "swap",
            add_help=True,
            allow_abbrev=False,
            argument_default=None,
            description="Swap entanglement and teleport a coherent state",
            help="Evaluate one swap-and-teleport configuration",
            prog=f"{self._parser.prog} swap",
        )
        for flag, text in (
                ("--r", "Squeezing r1 of the first EPR source"),
                ("--r2", "Squeezing r2 of the first EPR source (default: --r)"),
                ("--s", "Squeezing s1 of the second EPR source"),
                ("--s2", "Squeezing s2 of the second EPR source (default: --s)"),
        ):
            _cmd_swap.add_argument(flag, help=text, metavar="R", type=float)
        _cmd_swap.add_argument(
            "--db",
            help="Squeezing of all four squeezers in decibels",
            metavar="DB",
            type=float,
        )
        self._add_gain_flags(_cmd_swap, "auto")

        _cmd_sweep = cmd.add_parser(
            "sweep",
            add_help=True,
            allow_abbrev=False,
            argument_default=None,
            description="Sweep the reference scenarios over a squeezing range",
            help="Tabulate fidelities and criteria of scenarios a-e",
            prog=f"{self._parser.prog} sweep",
        )
        _cmd_sweep.add_argument(
            "--scenario",
            action="append",
            choices=[s.value for s in protocol.Scenario],
            help="Scenario to include, repeatable (default: all)",
        )
        _cmd_sweep.add_argument(
            "--db-range",
            default=[0.0, 10.0, 0.5],
            dest="db_range",
            help="Squeezing range in decibels (default: 0 10 0.5)",
            metavar=("MIN", "MAX", "STEP"),
            nargs=3,
            type=float,
        )
        _cmd_sweep.add_argument(
            "--format",
            choices=["csv", "json"],
            default="csv",
            help="Output format",
        )
        _cmd_sweep.add_argument(
            "--out",
            help="Path to write the table to (default: standard output)",
            metavar="PATH",
            type=os.path.abspath,
        )
        self._add_gain_flags(_cmd_sweep, None)

        cmd.add_parser(
            "verify",
            add_help=True,
            allow_abbrev=False,
            argument_default=None,
            description="Run the verification suite",
            help="Cross-check the engine against the closed forms",
            prog=f"{self._parser.prog} verify",
        )

        return self._parser.parse_args(self._argv[1:])

    def __enter__(self):
        self.args = self._parse_args()
        return self

    def __exit__(self, exc_type, exc_value, exc_tb):
        pass

    def run(self):
        """Execute selected commands"""
        logging.basicConfig(level=logging.DEBUG if self.args.verbose else logging.INFO)

        if not self.args.cmd:
            print("No subcommand specified", file=sys.stderr)
            self._parser.print_help(file=sys.stderr)
            ret = Cli.EXITCODE_INVALID_COMMAND
        elif self.args.cmd == "swap":
            ret = CliSwap(self).run()
        elif self.args.cmd == "sweep":
            ret = CliSweep(self).run()
        elif self.args.cmd == "verify":
            ret = CliVerify(self).run()
        else:
            raise RuntimeError("Command mismatch")

        return ret


def _run(argv):
    with Cli(["cvswap"] + argv) as cli:
        return cli.run()


def test_swap_quoted_fidelity(capsys):
    ret = _run([
        "swap", "--r", "0.6908", "--s", "0.6908", "--r2", "0", "--s2", "0",
        "--eta-c-sq", "0.99", "--eta-a-sq", "0.99", "--g-swap", "auto",
    ])
    assert ret == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["fidelity"] - 0.5201) < 5e-4
    assert abs(report["fidelity"] - report["fidelity_closed_form"]) < 1e-10
    assert abs(report["params"]["eta_c"] ** 2 - 0.99) < 1e-15


def test_swap_classical_point(capsys):
    assert _run(["swap", "--r", "0", "--s", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["fidelity"] - 0.5) < 1e-12
    assert report["duan_sum"] >= 1 - 1e-12
    assert not report["inseparable"]

    assert _run(["swap", "--r", "1", "--s", "1", "--g-swap", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["fidelity"] <= 0.5 + 1e-12


def test_swap_invalid_flags(capsys):
    assert _run(["swap", "--db", "6", "--r", "1"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "--r" in capsys.readouterr().err
    assert _run(["swap", "--eta-c-sq", "1.2"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "--eta-c-sq" in capsys.readouterr().err
    assert _run([]) == Cli.EXITCODE_INVALID_COMMAND

    try:
        _run(["swap", "--g-swap", "best"])
        assert False, "invalid gain accepted"
    except SystemExit as e:
        assert e.code == Cli.EXITCODE_INVALID_COMMAND
    assert "--g-swap" in capsys.readouterr().err


def test_sweep_csv(capsys):
    assert _run(["sweep"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(protocol.SWEEP_COLUMNS)
    assert len(lines) == 106

    assert _run(["sweep"]) == 0
    assert capsys.readouterr().out.splitlines() == lines

    assert _run(["sweep", "--scenario", "d", "--db-range", "3", "3", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("d,3,")


def test_sweep_json(capsys, tmp_path):
    out = tmp_path / "sweep.json"
    assert _run(["sweep", "--scenario", "a", "--scenario", "b", "--format", "json", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    rows = json.loads(out.read_text())
    assert len(rows) == 42
    assert rows[0]["scenario"] == "a" and rows[0]["g_swap"] is None
    assert rows[-1]["scenario"] == "b" and rows[-1]["db"] == 10.0

    assert _run(["sweep", "--db-range", "5", "1", "0.5"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "--db-range" in capsys.readouterr().err


def test_verify_exit_codes(capsys, monkeypatch):
    assert _run(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out

    monkeypatch.setitem(verify.EXPECTED, "fidelity_10db", 0.6)
    assert _run(["verify"]) == Cli.EXITCODE_VERIFY_FAILED
    out = capsys.readouterr().out
    assert "FAIL fidelity_10db_engine" in out


def test_non_finite_flags(capsys):
    assert _run(["swap", "--r", "nan"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "Invalid --r" in capsys.readouterr().err
    assert _run(["swap", "--s", "400"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "Invalid --s" in capsys.readouterr().err
    assert _run(["swap", "--g", "inf"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "Invalid --g" in capsys.readouterr().err
    assert _run(["sweep", "--db-range", "0", "inf", "1"]) == Cli.EXITCODE_INVALID_COMMAND
    assert "Invalid --db-range" in capsys.readouterr().err
