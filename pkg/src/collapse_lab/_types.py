from typing import Literal

Outcome = Literal["slit_a", "slit_b", "none"]
StepDistribution = Literal["fixed", "normal"]
AbsorbMode = Literal["joint", "tau-only"]
Subcommand = Literal[
    "born", "walk", "gue", "diffusion", "distance", "decompose", "pattern"
]
