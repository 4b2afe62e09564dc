import numpy as np
import pytest

from bsmc import instance
from bsmc.config import BudgetSpec, JitterConfig
from bsmc.experiments import PUBLISHED_E1, epsilon_for_fidelity, error_budget


def test_epsilon_hits_target_fidelity(default_cfg):
    u = instance.transfer_matrix(default_cfg)
    eps = epsilon_for_fidelity(u, 0.95, 20, 3)
    fids = [f for _, f in instance.noisy_unitaries(u, eps, 20, 3)]
    assert np.mean(fids) == pytest.approx(0.95, abs=1e-5)
    assert epsilon_for_fidelity(u, 1.0, 20, 3) == 0.0


def test_budget_row_order_and_published_column(default_cfg):
    cfg = default_cfg.replace(
        jitter=JitterConfig(True, 50, 0),
        budget=BudgetSpec(reference_m=23, reference_n_jitter=20, realizations=3),
    )
    rows = error_budget(cfg)
    assert [r.key for r in rows] == ["reference", "ideal", "s_bar", "fidelity@0.985", "both@0.985", "distinguishable", "both@0.904"]
    assert all(r.to_dict()["published_E1"] == PUBLISHED_E1[r.key] for r in rows)
    assert rows[3].fidelity == pytest.approx(0.985, abs=1e-5)
    # visibilities (0.98, 0.95, 0.90) give a mean overlap just under 0.973
    assert rows[2].s_bar == pytest.approx(0.9712, abs=1e-4)
