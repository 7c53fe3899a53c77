from certificates import artifacts
from certificates.exceptions import TheoremViolation
from certificates.serializers import CapBoundsSerializer, ExperimentConfigSerializer
from certificates.services import SWEEP_INDEX_MAX, record_sweep, sweep
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '在 r × L 網格上計算 ∫S/vol、λ_k²、cap 上界檢查與證書判定'
    command_name = 'sweep'

    def run(self, config):
        table = sweep(
            config['r'], config['L'], config['n'], config['N'],
            t_body=config['t_body'],
            w_taper=config['w_taper'],
            k=min(config['k'], SWEEP_INDEX_MAX),
            **self.solver_options(config),
        )
        summary = {
            'cap_bounds': CapBoundsSerializer(table.cap_bounds).data,
            'laplace_cap_bounds': CapBoundsSerializer(table.laplace_cap_bounds).data,
            'cells': len(table.rows),
            'failed': len(table.failed),
            'refuted': sum(1 for row in table.rows if row.verdict == 'REFUTED'),
        }
        self.emit(config, artifacts.SWEEP_COLUMNS, artifacts.sweep_rows(table), summary)

        if config['record']:
            records = record_sweep(table, config=ExperimentConfigSerializer(config).data)
            self.stdout.write(f'  已寫入 {len(records)} 筆紀錄')

        # min-max 上界與已證明的不等式都屬定理層級
        problems = [f"r={row.r:g} L={row.L:g}: {row.violation}" for row in table.violations]
        problems += [
            f"r={row.r:g} L={row.L:g}: λ_k² 超過 cap 上界"
            for row in table.rows
            if row.cap_check is False or row.laplace_cap_check is False
        ]
        if problems:
            raise TheoremViolation(None, problems)

        self.verdict(
            f"{summary['cells']} 格，{summary['refuted']} 格 REFUTED，{summary['failed']} 格失敗",
            ok=not table.failed,
        )
