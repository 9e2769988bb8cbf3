"""Experiment presets for the four published NMSE-versus-SNR figures.

All presets use the DFT phase schedule, ALS with ``epsilon=1e-5`` and
``i_max=15``, BiG-AMP with damping 0.3, 500 trials and a 0:5:30 dB SNR grid.

* ``fig3``: K=32, N=16, M=12, T=100, P=16, beta=0.2; all three methods.
* ``fig4``: as fig3 with N=20. With P=16 < N the LSKRF baseline is
  underdetermined and runs on its minimum-norm solution.
* ``fig5``: K=16, N=32, T=100, P=16, beta=0.2, M swept over 4, 8, 12, 16
  (pilot length follows M).
* ``fig6``: K=20, N=32, M=16, T=100, P=16, beta swept over 0.1, 0.2, 0.3, 0.5.
"""
from __future__ import annotations

from ..errors import ConfigError
from ..parafac import AlsOptions
from ..scene import SceneConfig
from .config import HARNESS_BIGAMP, ExperimentConfig

SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_TRIALS = 500

_PRESETS = {
    "fig3": dict(scene=dict(K=32, N=16, M=12, T=100, P=16, beta=0.2),
                 methods=("proposed", "lskrf", "genie_ls")),
    "fig4": dict(scene=dict(K=32, N=20, M=12, T=100, P=16, beta=0.2),
                 methods=("proposed", "lskrf", "genie_ls")),
    "fig5": dict(scene=dict(K=16, N=32, M=8, T=100, P=16, beta=0.2),
                 methods=("proposed",), sweep=("M", (4, 8, 12, 16))),
    "fig6": dict(scene=dict(K=20, N=32, M=16, T=100, P=16, beta=0.2),
                 methods=("proposed",), sweep=("beta", (0.1, 0.2, 0.3, 0.5))),
}

DESCRIPTIONS = {
    "fig3": "NMSE vs SNR, K=32 N=16 M=12 T=100 P=16 beta=0.2; proposed, LSKRF, genie LS",
    "fig4": "NMSE vs SNR, K=32 N=20 M=12 T=100 P=16 beta=0.2; proposed, LSKRF, genie LS",
    "fig5": "NMSE vs SNR of the proposed scheme, K=16 N=32 T=100 P=16 beta=0.2, M in {4,8,12,16}",
    "fig6": "NMSE vs SNR of the proposed scheme, K=20 N=32 M=16 T=100 P=16, beta in {0.1,0.2,0.3,0.5}",
}


def preset_names():
    return sorted(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    try:
        entry = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}") from None
    return ExperimentConfig(
        scene=SceneConfig(**entry["scene"]),
        snr_grid_db=SNR_GRID,
        trials=DEFAULT_TRIALS,
        methods=entry["methods"],
        als_opts=AlsOptions(epsilon=1e-5, i_max=15),
        bigamp_opts=HARNESS_BIGAMP,
        name=name,
        sweep=entry.get("sweep"),
    )
