import json
from dataclasses import asdict, dataclass, field, replace
from typing import Dict

DEFAULT_CYCLE_COSTS: Dict[str, int] = {
    "literal": 1,
    "load": 1,
    "store": 1,
    "int_arith": 1,
    "float_arith": 3,
    "compare": 1,
    "branch": 1,
    "array": 2,
    "call": 5,
    "return": 2,
    "intrinsic": 10,
    "emit": 2,
}


@dataclass(frozen=True)
class PlatformModel:
    """Cycle and current model of the target microcontroller."""

    name: str
    clock_hz: float
    active_current_a: float
    cycle_costs: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_CYCLE_COSTS))
    checkpoint_cost_cycles: int = 50
    restore_cost_cycles: int = 50
    memo_lookup_base_cycles: int = 2
    memo_scan_cycles_per_entry: int = 1
    rng_draw_cycles: int = 4

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")
        if self.active_current_a <= 0:
            raise ValueError("active_current_a must be positive")
        missing = set(DEFAULT_CYCLE_COSTS) - set(self.cycle_costs)
        if missing:
            raise ValueError(f"cycle_costs missing {sorted(missing)}")
        for k, v in self.cycle_costs.items():
            if v < 1:
                raise ValueError(f"cycle cost {k!r} must be >= 1")
        for k in ("memo_lookup_base_cycles", "memo_scan_cycles_per_entry", "rng_draw_cycles"):
            if getattr(self, k) < 1:
                raise ValueError(f"{k} must be >= 1")
        if self.checkpoint_cost_cycles < 0 or self.restore_cost_cycles < 0:
            raise ValueError("checkpoint/restore costs must be >= 0")

    def cost(self, kind: str) -> int:
        return self.cycle_costs[kind]

    @property
    def cycles_per_ms(self) -> float:
        return self.clock_hz / 1000.0

    def with_overrides(self, **changes) -> "PlatformModel":
        costs = changes.pop("cycle_costs", None)
        if costs is not None:
            changes["cycle_costs"] = {**self.cycle_costs, **costs}
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS: Dict[str, PlatformModel] = {
    "cortex-m": PlatformModel("cortex-m", clock_hz=100_000, active_current_a=0.012),
    "msp430": PlatformModel("msp430", clock_hz=100_000, active_current_a=0.002),
}


def get_platform(spec) -> PlatformModel:
    """Resolve a preset name, a dict of overrides, or a PlatformModel.

    A dict may name a ``base`` preset (default ``cortex-m``); remaining keys
    override PlatformModel fields, with ``cycle_costs`` merged key by key.
    """
    if isinstance(spec, PlatformModel):
        return spec
    if isinstance(spec, str):
        try:
            return PRESETS[spec]
        except KeyError:
            raise ValueError(f"unknown platform preset {spec!r}; known: {sorted(PRESETS)}") from None
    if isinstance(spec, dict):
        spec = dict(spec)
        base_name = spec.pop("base", None)
        if base_name is None:
            base_name = spec["name"] if spec.get("name") in PRESETS else "cortex-m"
        base = get_platform(base_name)
        unknown = set(spec) - set(PlatformModel.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown platform fields {sorted(unknown)}")
        return base.with_overrides(**spec)
    raise TypeError(f"cannot build a platform from {type(spec).__name__}")


def load_platform(path) -> PlatformModel:
    with open(path) as fh:
        return get_platform(json.load(fh))
