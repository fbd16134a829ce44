"""Every published tuning constant has one home, in ``phylink.config``."""

import ast
import dataclasses
from pathlib import Path

import pytest

import phylink
from phylink import config as C
from phylink.link import BlerModel

CONFIG_TYPES = [
    C.OmpConfig, C.GraphConfig, C.KronConfig, C.SeqConfig,
    C.ParticleConfig, C.GridFilterConfig, C.LinkDefaults,
]

# (config type, field, published value)
PUBLISHED = [
    (C.OmpConfig, "k_sparsity", 4),
    (C.OmpConfig, "l_max", 16),
    (C.OmpConfig, "l_fir", 7),
    (C.OmpConfig, "a_kalman", 0.99),
    (C.OmpConfig, "spline_kernel", (0.125, 0.375, 0.5, 0.375, 0.125)),
    (C.GraphConfig, "time_distance_weight", 1.55),
    (C.GraphConfig, "near_threshold", 1.7),
    (C.GraphConfig, "mid_threshold", 3.55),
    (C.GraphConfig, "density_weights", (0.30, 0.27, 0.08)),
    (C.GraphConfig, "init_blend", (0.66, 0.34)),
    (C.GraphConfig, "init_smooth_weights", (0.28, 0.31, 0.05)),
    (C.GraphConfig, "gate_time", (0.08, 0.92, 0.985)),
    (C.GraphConfig, "gate_freq", (0.14, 0.94, 0.997)),
    (C.GraphConfig, "obs_weight", (0.16, 0.56)),
    (C.GraphConfig, "obs_weight_max", 8.0),
    (C.GraphConfig, "freq_edge_weight", 1.235),
    (C.GraphConfig, "time_edge_weight", 0.055),
    (C.GraphConfig, "momentum", (0.972, 0.982)),
    (C.GraphConfig, "momentum_switch", 5),
    (C.GraphConfig, "n_iterations", 7),
    (C.GraphConfig, "final_freq_weights", (0.16, 0.42)),
    (C.GraphConfig, "penalty_near", (0.0013, 0.0028, 0.0018)),
    (C.GraphConfig, "penalty_mid", (0.0048, 0.0055, 0.0042)),
    (C.GraphConfig, "penalty_far", (0.0092, 0.0080, 0.0070, 0.0038)),
    (C.GraphConfig, "var_pilot", (0.26, 0.006)),
    (C.GraphConfig, "var_near", (0.070, 0.060, 0.0095)),
    (C.GraphConfig, "var_mid", (0.092, 0.235, 0.0160)),
    (C.GraphConfig, "var_far", (0.125, 0.545, 0.0240)),
    (C.GraphConfig, "var_floor", 1e-4),
    (C.SeqConfig, "alpha_f", (0.0077, 0.094)),
    (C.SeqConfig, "alpha_t", (0.0057, 0.053)),
    (C.SeqConfig, "alpha_s", (0.0027, 0.021)),
    (C.SeqConfig, "blend", (0.08, 0.12, 0.19, 0.61)),
    (C.SeqConfig, "variance_scale", 0.553),
    (C.ParticleConfig, "n_particles", 100),
    (C.ParticleConfig, "rw_std", 0.5),
    (C.ParticleConfig, "eps", 1e-12),
    (C.ParticleConfig, "p_cons", 0.2),
    (C.ParticleConfig, "margin_db", 0.5),
    (C.GridFilterConfig, "n_grid", 169),
    (C.GridFilterConfig, "snr_lo", -12.0),
    (C.GridFilterConfig, "snr_hi", 30.0),
    (C.GridFilterConfig, "spacing", 0.25),
    (C.GridFilterConfig, "prior_mean", 9.0),
    (C.GridFilterConfig, "prior_std", 6.5),
    (C.GridFilterConfig, "rw_std", 0.52),
    (C.GridFilterConfig, "forget", 0.006),
    (C.GridFilterConfig, "trim", (0.15, 0.85)),
    (C.GridFilterConfig, "step_up", 0.0237),
    (C.GridFilterConfig, "offset_clamp", (-2.94, 0.25)),
    (C.GridFilterConfig, "warmup", ((5, -0.95), (10, -0.35))),
    (C.GridFilterConfig, "window", 64),
    (C.GridFilterConfig, "cold_start_snr", 7.0),
    (C.LinkDefaults, "batch", 5),
    (C.LinkDefaults, "target", 0.1),
]


def _defaults(cls):
    return {f.name: f.default for f in dataclasses.fields(cls)}


def _owners(field, value):
    return [cls.__name__ for cls in CONFIG_TYPES if _defaults(cls).get(field, object()) == value]


@pytest.mark.parametrize("cls, field, value", PUBLISHED, ids=lambda x: getattr(x, "__name__", str(x)))
def test_published_value(cls, field, value):
    assert getattr(cls(), field) == value


# each algorithm keeps its own numerical guard ``eps``, so it is exempt here
@pytest.mark.parametrize(
    "cls, field, value", [p for p in PUBLISHED if p[1] != "eps"], ids=lambda x: getattr(x, "__name__", str(x))
)
def test_single_owner(cls, field, value):
    # a (name, value) pair that occurs in two config types would be a duplicated constant
    assert _owners(field, value) == [cls.__name__]


def test_grid_spans_published_range():
    g = C.GridFilterConfig()
    assert g.snr_lo + (g.n_grid - 1) * g.spacing == g.snr_hi


def test_default_bler_model_is_monotone():
    m = BlerModel.default()
    assert m.n_mcs == 28
    assert all(a < b for a, b in zip(m.theta, m.theta[1:]))
    assert all(a < b for a, b in zip(m.rates, m.rates[1:]))


def _distinctive_literals():
    out = set()
    for _, _, v in PUBLISHED:
        stack = [v]
        while stack:
            x = stack.pop()
            if isinstance(x, tuple):
                stack.extend(x)
            elif isinstance(x, float) and "e" not in repr(x) and len(repr(abs(x)).rstrip("0")) >= 5:
                out.add(x)
    return out


ALGORITHM_MODULES = ["agnostic_omp.py", "agnostic_graph.py", "covariance_est.py", "link.py", "grid.py", "channel.py"]


@pytest.mark.parametrize("module", ALGORITHM_MODULES)
def test_no_hardcoded_constants(module):
    src = Path(phylink.__file__).with_name(module)
    distinctive = _distinctive_literals()
    found = [
        (node.lineno, node.value)
        for node in ast.walk(ast.parse(src.read_text()))
        if isinstance(node, ast.Constant) and isinstance(node.value, float) and abs(node.value) in distinctive
    ]
    assert found == []
