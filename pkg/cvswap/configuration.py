"""cvswap/configuration - Parameter Documents

The `configuration` module validates the parameter documents the command-line
front end collects from its flags. Squeezing arrives either as squeezing
parameters or in decibels, efficiencies arrive as eta^2. `Conf` converts both
exactly once; everything past it works with squeezing parameters and
amplitude efficiencies.
"""

import math
from typing import Any, Dict, List, Optional

from jsonschema import Draft7Validator, ValidationError, validate

from . import criteria, protocol


# Past MAX_R the vacuum terms drown in coefficient cancellation
MAX_R = 20.0
MAX_DB = criteria.r_to_db(MAX_R)
MAX_GAIN = 100.0
MAX_POINTS = 10000

SQUEEZING = {"type": "number", "minimum": 0, "maximum": MAX_R}
DECIBELS = {"type": "number", "minimum": 0, "maximum": MAX_DB}
EFFICIENCY = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}
NUMERIC_GAIN = {"type": "number", "minimum": -MAX_GAIN, "maximum": MAX_GAIN}
GAIN = {
    "anyOf": [
        NUMERIC_GAIN,
        {"type": "string", "enum": ["auto"]},
    ]
}

SWAP = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "r": SQUEEZING,
        "r2": SQUEEZING,
        "s": SQUEEZING,
        "s2": SQUEEZING,
        "db": DECIBELS,
        "g_swap": GAIN,
        "g": NUMERIC_GAIN,
        "eta_c_sq": EFFICIENCY,
        "eta_a_sq": EFFICIENCY,
    },
    "additionalProperties": False
}

SWEEP = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "scenarios": {
            "type": "array",
            "items": {
                "type": "string",
                "enum": [scenario.value for scenario in protocol.Scenario]
            },
            "minItems": 1
        },
        "db_min": DECIBELS,
        "db_max": DECIBELS,
        "db_step": {"type": "number", "exclusiveMinimum": 0},
        "format": {
            "type": "string",
            "enum": ["csv", "json"]
        },
        "out": {"type": ["string", "null"]},
        "g_swap": GAIN,
        "g": NUMERIC_GAIN,
        "eta_c_sq": EFFICIENCY,
        "eta_a_sq": EFFICIENCY,
    },
    "required": ["scenarios", "db_min", "db_max", "db_step", "format"],
    "additionalProperties": False
}

FLAGS = {
    "r": "--r",
    "r2": "--r2",
    "s": "--s",
    "s2": "--s2",
    "db": "--db",
    "g_swap": "--g-swap",
    "g": "--g",
    "eta_c_sq": "--eta-c-sq",
    "eta_a_sq": "--eta-a-sq",
    "scenarios": "--scenario",
    "db_min": "--db-range",
    "db_max": "--db-range",
    "db_step": "--db-range",
    "format": "--format",
    "out": "--out",
}


def flag_for(error: ValidationError) -> Optional[str]:
    """Command-line flag a validation error refers to"""

    for entry in error.absolute_path:
        if entry in FLAGS:
            return FLAGS[entry]
    return None


def _efficiency(value: Optional[float]) -> Optional[float]:
    return None if value is None else math.sqrt(value)


class Conf:
    """Validated parameter document"""

    def __init__(self, options):
        self.options = options

    @staticmethod
    def _validate(data: Dict[str, Any], schema: Dict[str, Any]):
        # Range keywords never reject NaN
        for key, value in data.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ValidationError(f"'{key}' must be a finite number, got {value}", path=[key])

        validate(data, schema, cls=Draft7Validator)

        # Cross-field rules
        if "db" in data:
            for conflict in ("r", "s"):
                if conflict in data:
                    raise ValidationError(
                        f"'db' and '{conflict}' are mutually exclusive",
                        path=[conflict],
                    )
        if "db_min" in data and data["db_min"] > data["db_max"]:
            raise ValidationError(
                f"db_min {data['db_min']} exceeds db_max {data['db_max']}",
                path=["db_min"],
            )
        if "db_step" in data and (data["db_max"] - data["db_min"]) / data["db_step"] >= MAX_POINTS:
            raise ValidationError(
                f"db_step {data['db_step']} gives more than {MAX_POINTS} points",
                path=["db_step"],
            )

    @classmethod
    def swap(cls, data: Dict[str, Any]):
        """Parameters of a single swap-and-teleport run"""
        cls._validate(data, SWAP)
        return cls(data)

    @classmethod
    def sweep(cls, data: Dict[str, Any]):
        """Parameters of a scenario sweep"""
        cls._validate(data, SWEEP)
        return cls(data)

    def swap_params(self) -> protocol.SwapParams:
        """Library parameters, with `auto` gains resolved"""

        opts = self.options
        if "db" in opts:
            r = s = criteria.db_to_r(opts["db"])
        else:
            r = opts.get("r", 0.0)
            s = opts.get("s", 0.0)

        params = protocol.SwapParams(
            r1=r,
            r2=opts.get("r2", r),
            s1=s,
            s2=opts.get("s2", s),
            g=opts.get("g", 1.0),
            eta_c=math.sqrt(opts.get("eta_c_sq", 1.0)),
            eta_a=math.sqrt(opts.get("eta_a_sq", 1.0)),
        )

        g_swap = opts.get("g_swap", "auto")
        if g_swap == "auto":
            g_swap = criteria.auto_gain(params)
        return params.replace(g_swap=g_swap)

    def overrides(self) -> Dict[str, Optional[float]]:
        """Scenario overrides; `None` keeps the scenario default"""

        opts = self.options
        g_swap = opts.get("g_swap")
        return {
            "g_swap": None if g_swap == "auto" else g_swap,
            "g": opts.get("g"),
            "eta_c": _efficiency(opts.get("eta_c_sq")),
            "eta_a": _efficiency(opts.get("eta_a_sq")),
        }

    def dbs(self) -> List[float]:
        return protocol.db_grid(self.options["db_min"], self.options["db_max"], self.options["db_step"])


SWEEP_EXAMPLE = {
    "scenarios": ["a", "b", "c", "d", "e"],
    "db_min": 0.0,
    "db_max": 10.0,
    "db_step": 0.5,
    "format": "csv",
    "out": None,
}


def _rejected(build, data) -> Optional[str]:
    try:
        build(data)
    except ValidationError as e:
        return flag_for(e)
    raise AssertionError(f"accepted invalid document: {data}")


def test_swap_conf_validation():
    conf = Conf.swap({"r": 0.6908, "s": 0.6908, "r2": 0, "s2": 0, "eta_c_sq": 0.99, "eta_a_sq": 0.99})
    params = conf.swap_params()
    assert abs(params.g_swap - math.tanh(0.6908)) < 1e-12
    assert params.eta_c == math.sqrt(0.99)
    assert params.r2 == 0 and params.s2 == 0

    params = Conf.swap({"r": 0.4, "s": 0.9, "g_swap": 0.3}).swap_params()
    assert (params.r1, params.r2, params.s1, params.s2, params.g_swap) == (0.4, 0.4, 0.9, 0.9, 0.3)

    params = Conf.swap({}).swap_params()
    assert params.g_swap == 0.0 and params.g == 1.0


def test_units_convert_once():
    params = Conf.swap({"db": 6.0, "eta_c_sq": 0.95}).swap_params()
    assert abs(criteria.r_to_db(params.r1) - 6.0) < 1e-12
    assert abs(params.eta_c ** 2 - 0.95) < 1e-15
    assert params.eta_a == 1.0

    overrides = Conf.sweep(dict(SWEEP_EXAMPLE, eta_a_sq=0.9, g_swap="auto")).overrides()
    assert overrides["g_swap"] is None and overrides["g"] is None
    assert abs(overrides["eta_a"] ** 2 - 0.9) < 1e-15


def test_sweep_conf_validation():
    conf = Conf.sweep(SWEEP_EXAMPLE)
    assert len(conf.dbs()) == 21
    assert Conf.sweep(dict(SWEEP_EXAMPLE, db_min=4.0, db_max=4.0)).dbs() == [4.0]


def test_invalid_documents():
    assert _rejected(Conf.swap, {"eta_c_sq": 1.5}) == "--eta-c-sq"
    assert _rejected(Conf.swap, {"eta_a_sq": 0}) == "--eta-a-sq"
    assert _rejected(Conf.swap, {"r": -1}) == "--r"
    assert _rejected(Conf.swap, {"db": 3, "s": 1}) == "--s"
    assert _rejected(Conf.swap, {"g_swap": "best"}) == "--g-swap"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, scenarios=[])) == "--scenario"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, scenarios=["f"])) == "--scenario"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, db_min=6.0, db_max=3.0)) == "--db-range"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, db_step=0)) == "--db-range"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, format="xml")) == "--format"


def test_out_of_range_numbers():
    assert _rejected(Conf.swap, {"r": math.nan}) == "--r"
    assert _rejected(Conf.swap, {"s2": math.inf}) == "--s2"
    assert _rejected(Conf.swap, {"r": 400.0}) == "--r"
    assert _rejected(Conf.swap, {"db": 4000.0}) == "--db"
    assert _rejected(Conf.swap, {"eta_c_sq": math.nan}) == "--eta-c-sq"
    assert _rejected(Conf.swap, {"g_swap": math.nan}) == "--g-swap"
    assert _rejected(Conf.swap, {"g_swap": -1e300}) == "--g-swap"
    assert _rejected(Conf.swap, {"g": 1e300}) == "--g"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, db_max=math.inf)) == "--db-range"
    assert _rejected(Conf.sweep, dict(SWEEP_EXAMPLE, db_step=1e-300)) == "--db-range"

    params = Conf.swap({"r": MAX_R, "s": MAX_R, "g": -MAX_GAIN}).swap_params()
    assert params.r1 == MAX_R and params.g == -MAX_GAIN
    assert abs(Conf.swap({"db": MAX_DB}).swap_params().r1 - MAX_R) < 1e-12
