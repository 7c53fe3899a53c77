from certificates import artifacts
from certificates.exceptions import TheoremViolation
from certificates.inequalities import bounds_for_index, cap_upper_bounds, evaluate_bounds
from certificates.serializers import BoundReportSerializer, CapBoundsSerializer
from certificates.services import extrapolated_lambda1
from geometry.curvature import global_quantities, scalar_curvature_field
from spectra.services import dirac_spectrum, yamabe_spectrum
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '檢查 Lichnerowicz / Friedrich / Hijazi / Bär 不等式與猜想右式'
    command_name = 'bounds'

    def run(self, config):
        options = self.solver_options(config)
        p = self.profile(config)
        c = scalar_curvature_field(p)
        q = global_quantities(p, c)
        k = config['k']

        # 1. 譜與 Yamabe 第一特徵值
        dirac = dirac_spectrum(p, k, estimate_errors=True, **options)
        mu1 = yamabe_spectrum(p, c, 1, **options).kth(1) if p.n >= 3 else None

        # 2. 不等式用外插後的 λ₁；先寫出結果再判定
        _, lambda1 = extrapolated_lambda1(p, **options)
        report = evaluate_bounds(
            p, c, dirac, mu1, q,
            error_budget=2.0 * lambda1.value * lambda1.err, check=False,
            lambda1=lambda1.value, err_lambda=lambda1.err,
        )
        summary = {'report': BoundReportSerializer(report).data}

        if config['profile'] == 'pinocchio':
            cap = cap_upper_bounds(
                p.n, config['t_body'], config['w_taper'], k, config['N'], **options,
            )
            index_bounds = [bounds_for_index(j, dirac, cap, q) for j in range(1, k + 1)]
            summary['cap_bounds'] = CapBoundsSerializer(cap).data
            summary['index_bounds'] = [
                {
                    'k': b.k,
                    'lambda_sq': b.lambda_sq,
                    'cap_bound': b.cap_bound,
                    'max_constant': b.max_constant,
                    'within_cap': b.within_cap,
                }
                for b in index_bounds
            ]
            outside = [b.k for b in index_bounds if not b.within_cap]
        else:
            outside = []

        self.emit(config, artifacts.BOUND_COLUMNS, artifacts.bound_rows(report), summary)

        problems = report.violations() + [f"λ_{j}² > C_{j}" for j in outside]
        if problems:
            raise TheoremViolation(report, problems)
        self.verdict(
            f"λ₁² = {report.lambda1_sq:.6f}, 猜想右式 = {report.conjecture_rhs:.6f}, "
            f"conjecture slack = {report.slacks['conjecture']:.6f}",
        )
