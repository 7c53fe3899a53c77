import numpy as np

from certificates import artifacts
from certificates.serializers import ConformalCheckSerializer, EpsilonSweepSerializer
from geometry.conformal import (
    conformal_scalar_curvature,
    dirichlet_form_residual,
    epsilon_unboundedness_sweep,
    random_conformal_factor,
)
from geometry.curvature import scalar_curvature_field
from ._experiment import ExperimentCommand

IDENTITY_SAMPLES = 5
SEED = 0


class Command(ExperimentCommand):
    help = 'conformal change 的 total scalar curvature 恆等式與 ε 無界性 sweep'
    command_name = 'conformal'

    def run(self, config):
        p = self.profile(config)
        c = scalar_curvature_field(p)

        # 1. 隨機正徑向 u 的恆等式檢查（固定 seed）
        rng = np.random.default_rng(SEED)
        checks = []
        dirichlet = []
        for _ in range(IDENTITY_SAMPLES):
            u = random_conformal_factor(p, rng)
            checks.append(conformal_scalar_curvature(p, c, u))
            dirichlet.append(dirichlet_form_residual(p, c, u))

        # 2. ε sweep
        sweeps = [
            epsilon_unboundedness_sweep(p, c, j, eps=config['eps'], tol=config['tol'], driver=config['driver'])
            for j in config['j']
        ]

        max_residual = max(report.identity_residual for report in checks)
        summary = {
            'identity': ConformalCheckSerializer(checks, many=True).data,
            'max_identity_residual': max_residual,
            'max_dirichlet_residual': max(dirichlet),
            'sweeps': EpsilonSweepSerializer(sweeps, many=True).data,
        }
        self.emit(config, artifacts.EPSILON_COLUMNS, artifacts.epsilon_rows(sweeps), summary)

        limits = ", ".join(f"j={s.j}: {s.extrapolated_limit:.4f} (μ={s.mu:.4f})" for s in sweeps)
        self.verdict(f"恆等式殘差 {max_residual:.2e}；{limits}")
