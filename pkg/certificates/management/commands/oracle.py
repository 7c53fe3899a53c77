from certificates import artifacts
from certificates.exceptions import TheoremViolation
from certificates.serializers import OracleReportSerializer
from certificates.services import run_oracle_suite
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '圓球 Sⁿ(1) 上的譜與等號情形驗證'
    command_name = 'oracle'

    def run(self, config):
        report = run_oracle_suite(config['n'], config['N'], **self.solver_options(config))
        self.emit(
            config,
            artifacts.ORACLE_COLUMNS,
            artifacts.oracle_rows(report),
            {'oracle': OracleReportSerializer(report).data},
        )
        if not report.passed:
            failed = [check.name for check in report.checks if not check.passed]
            raise TheoremViolation(report, [f"oracle 不符：{name}" for name in failed])
        self.verdict(f"PASS（最大相對誤差 {report.max_rel_error:.3e}）")
