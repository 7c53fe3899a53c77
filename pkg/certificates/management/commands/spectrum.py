from pathlib import Path

from certificates import artifacts
from certificates.serializers import SpectrumSummarySerializer
from geometry.curvature import scalar_curvature_field
from spectra.modes import dirac_mode, laplace_mode
from spectra.radial_operators import DIRAC, YAMABE
from spectra.services import radial_operator, spectrum_for
from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = '計算 Dirac / Laplace / Yamabe 譜（前 k 個值，計重數）'
    command_name = 'spectrum'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--dump-matrix',
            action='store_true',
            help='另外傾印最低模態的徑向矩陣（座標格式）',
        )

    def handle(self, *args, **options):
        self.dump_matrix = options.get('dump_matrix', False)
        return super().handle(*args, **options)

    def run(self, config):
        p = self.profile(config)
        kind = config['operator']
        spectrum = spectrum_for(
            p, kind, config['k'],
            cap=config['cap'],
            estimate_errors=config['estimate_errors'],
            **self.solver_options(config),
        )
        self.emit(
            config,
            artifacts.SPECTRUM_COLUMNS,
            artifacts.spectrum_rows(spectrum),
            {'spectrum': SpectrumSummarySerializer(spectrum).data},
        )

        if self.dump_matrix:
            mode = dirac_mode(p.n, 0) if kind == DIRAC else laplace_mode(p.n, 0)
            curvature = scalar_curvature_field(p) if kind == YAMABE else None
            op = radial_operator(p, kind, mode, cap=config['cap'], curvature=curvature)
            artifacts.write_matrix(Path(config['out']) / 'matrix.csv', op)

        self.verdict(
            f"{spectrum.operator}: λ_1 = {spectrum.kth(1):.6f}, "
            f"λ_{config['k']} = {spectrum.kth(config['k']):.6f}, "
            f"floor = {spectrum.truncation_floor:.4g}, certified = {spectrum.certified}",
            ok=spectrum.certified,
        )
