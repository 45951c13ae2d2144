"""Programs that each exercise one block-pruning rule of the safety probe.

Every program carries a ~20k-cycle warm-up loop so runs span several power
bursts; ``target`` is the id of the block the rule applies to.
"""

from dataclasses import dataclass

from approxify.energy import CapacitorSpec, EnergyTrace
from approxify.interp import InputCase
from approxify.lang import parse_source
from approxify.search import Validator

WARMUP = """
    float acc = 0.0;
    for (int w = 0; w < 900; w = w + 1) { acc = acc + float(w % 7) * 0.5; }
"""


@dataclass(frozen=True)
class MapperCase:
    name: str
    source: str
    target: str
    retained: bool
    reason: str

    def program(self):
        return parse_source(self.source)


CASES = (
    MapperCase("insensitive", f"""func main() {{ {WARMUP}
        float s = 0.0;
        for (int i = 0; i < 4; i = i + 1) {{ s = s + 1.0; }}
        emit_num(acc + s);
    }}""", "b1", False, "no checkpoint reduction"),
    MapperCase("error_blowup", f"""func main() {{ {WARMUP}
        float x = 1.0;
        for (int i = 0; i < 4000; i = i + 1) {{ x = x * 1.001; }}
        emit_num(x);
    }}""", "b1", False, "error above bound"),
    MapperCase("oob", f"""int table[8];
    func main() {{ {WARMUP}
        int k = 0;
        for (int i = 0; i < 400; i = i + 1) {{ k = k + 1; }}
        emit_num(acc + float(table[400 - k]));
    }}""", "b1", False, "crash: OutOfBounds"),
    MapperCase("watchdog", f"""func main() {{ {WARMUP}
        int done = 0;
        int rounds = 0;
        while (done == 0) {{
            for (int i = 0; i < 400; i = i + 1) {{ if (i == 399) {{ done = 1; }} }}
            rounds = rounds + 1;
        }}
        emit_num(acc + float(rounds));
    }}""", "b2", False, "crash: WatchdogExceeded"),
    MapperCase("benign", f"""func main() {{ {WARMUP}
        float s = 0.0;
        for (int i = 400; i >= 1; i = i - 1) {{ s = s + float(i) * 0.001; }}
        emit_num(acc + s);
    }}""", "b1", True, ""),
)


def validator(program, e_b=0.3):
    return Validator(program, [InputCase()], "cortex-m", CapacitorSpec.from_uf(220),
                     [EnergyTrace.constant(5.0)], "RMSE", e_b)
