from certificates import artifacts
from certificates.serializers import GlobalQuantitiesSerializer, NeckTailFitSerializer
from certificates.services import neck_tail_check
from geometry.curvature import global_quantities, neck_limit, scalar_curvature_field
from geometry.profile import validate_profile
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '輸出 profile、scalar curvature 與 ∫S/vol；給三個 L 時另做 neck 尾端擬合'
    command_name = 'curvature'

    def run(self, config):
        p = self.profile(config)
        c = scalar_curvature_field(p)
        q = global_quantities(p, c)
        report = validate_profile(p)

        summary = {
            'global': GlobalQuantitiesSerializer(q).data,
            'S_min': c.S_min,
            'profile_valid': report.passed,
            'max_joint_jump': report.max_joint_jump,
        }
        pinocchio = config['profile'] == 'pinocchio'
        if pinocchio:
            summary['neck_limit'] = neck_limit(config['n'], config['r'][0])
        if pinocchio and len(config['L']) == 3:
            fit = neck_tail_check(
                config['n'], config['r'][0], config['L'], config['N'],
                t_body=config['t_body'], w_taper=config['w_taper'],
            )
            summary['neck_tail'] = NeckTailFitSerializer(fit).data

        self.emit(config, artifacts.CURVATURE_COLUMNS, artifacts.curvature_rows(p, c), summary)
        self.verdict(
            f"∫S/vol = {q.ratio:.6f}, vol = {q.vol:.6f}, S_min = {c.S_min:.6f}",
            ok=report.passed,
        )
