from certificates import artifacts
from certificates.serializers import (
    CertificateRecordSerializer,
    CertificateSerializer,
    ExperimentConfigSerializer,
)
from certificates.services import counterexample_certificate, record_certificate
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '對單一 Pinocchio metric 產生反例證書（λ₁² 與猜想右式的差距及誤差預算）'
    command_name = 'certificate'

    def run(self, config):
        certificate = counterexample_certificate(self.spec(config), **self.solver_options(config))
        summary = {'certificate': CertificateSerializer(certificate).data}

        if config['record']:
            record = record_certificate(certificate, config=ExperimentConfigSerializer(config).data)
            data = CertificateRecordSerializer(record).data
            self.stdout.write(f"  已寫入紀錄 #{data['id']}（誤差預算 {data['error_budget']:.3e}）")

        self.emit(
            config,
            artifacts.CERTIFICATE_COLUMNS,
            [artifacts.certificate_row(certificate)],
            summary,
        )
        self.verdict(
            f"{certificate.verdict}: margin = {certificate.margin:.6f}, "
            f"budget = {certificate.error_budget:.3e}, C_1 = {certificate.cap_C1:.6f}",
            ok=certificate.refuted,
        )
