"""
實驗指令的共用骨架：讀設定檔、合併旗標、驗證、執行、輸出，並把例外對應到 exit code。

    0  完成（判定已算出）
    1  設定或輸入錯誤
    2  定理層級的不變量不成立（求解器有錯）
    3  解析度不足
"""
import json
import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from certificates import artifacts
from certificates.exceptions import TheoremViolation
from certificates.serializers import ExperimentConfigSerializer
from geometry.profile import ProfileSpec, build_pinocchio_profile, build_round_profile
from spectra.eigensolve import DRIVERS
from spectra.exceptions import ResolutionError
from spectra.radial_operators import OPERATOR_KINDS

logger = logging.getLogger(__name__)

EXIT_INVALID = 1
EXIT_THEOREM = 2
EXIT_RESOLUTION = 3

LIST_OPTIONS = {'r': float, 'L': float, 'eps': float, 'j': int}


def _as_list(value, cast):
    """'0.1,0.5' 或已是序列的值都轉成 list。"""
    if isinstance(value, str):
        return [cast(item) for item in value.split(',') if item.strip()]
    if isinstance(value, (list, tuple)):
        return [cast(item) for item in value]
    return [cast(value)]


def _flatten_errors(detail):
    if isinstance(detail, dict):
        return "; ".join(f"{key}: {_flatten_errors(value)}" for key, value in detail.items())
    if isinstance(detail, list):
        return " ".join(_flatten_errors(item) for item in detail)
    return str(detail)


class ExperimentCommand(BaseCommand):
    command_name = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON 設定檔；命令列旗標優先')
        parser.add_argument('--profile', choices=('pinocchio', 'round'))
        parser.add_argument('--n', type=int, help='維度')
        parser.add_argument('--r', help='neck 半徑，可用逗號分隔多個值')
        parser.add_argument('--L', help='neck 長度，可用逗號分隔多個值')
        parser.add_argument('--N', type=int, help='每單位長度的格數')
        parser.add_argument('--k', type=int, help='特徵值個數（計重數）')
        parser.add_argument('--t-body', dest='t_body', type=float)
        parser.add_argument('--w-taper', dest='w_taper', type=float)
        parser.add_argument('--eps', help='ε 列表，逗號分隔')
        parser.add_argument('--j', help='Yamabe 徑向模態索引，逗號分隔')
        parser.add_argument('--operator', choices=OPERATOR_KINDS)
        parser.add_argument('--errors', dest='estimate_errors', action='store_true', default=None,
                            help='以 h/2 重解估計 Richardson 誤差')
        parser.add_argument('--cap', action='store_true', default=None,
                            help='改解支撐在 Body 內的 Dirichlet 問題')
        parser.add_argument('--out', help='輸出目錄')
        parser.add_argument('--tol', type=float, help='特徵值絕對容許誤差（未指定時依特徵值大小取相對精度）')
        parser.add_argument('--jobs', type=int, help='worker 數')
        parser.add_argument('--driver', choices=DRIVERS)
        parser.add_argument('--record', action='store_true', default=None,
                            help='把結果寫入資料庫')

    def load_config(self, options):
        # 1. 設定檔
        data = {}
        if options.get('config'):
            try:
                data = json.loads(Path(options['config']).read_text(encoding='utf-8'))
            except (OSError, ValueError) as exc:
                raise CommandError(f"無法讀取設定檔：{exc}", returncode=EXIT_INVALID)
            data = data.get('config', data)

        # 2. 旗標覆蓋設定檔
        for name in ExperimentConfigSerializer().fields:
            value = options.get(name)
            if value is None:
                continue
            data[name] = _as_list(value, LIST_OPTIONS[name]) if name in LIST_OPTIONS else value
        for name, cast in LIST_OPTIONS.items():
            if name in data:
                data[name] = _as_list(data[name], cast)
        data['command'] = self.command_name

        serializer = ExperimentConfigSerializer(data=data)
        if not serializer.is_valid():
            raise CommandError(f"設定錯誤：{_flatten_errors(serializer.errors)}", returncode=EXIT_INVALID)
        return dict(serializer.validated_data)

    def handle(self, *args, **options):
        try:
            config = self.load_config(options)
        except ValueError as exc:
            raise CommandError(f"設定錯誤：{exc}", returncode=EXIT_INVALID)
        artifacts.write_config(config['out'], ExperimentConfigSerializer(config).data)

        try:
            self.run(config)
        except (ValidationError, serializers.ValidationError) as exc:
            messages = getattr(exc, 'messages', None) or [_flatten_errors(getattr(exc, 'detail', str(exc)))]
            raise CommandError("輸入錯誤：" + "；".join(messages), returncode=EXIT_INVALID)
        except TheoremViolation as exc:
            raise CommandError(str(exc), returncode=EXIT_THEOREM)
        except ResolutionError as exc:
            raise CommandError(f"解析度不足：{exc}", returncode=EXIT_RESOLUTION)

    def run(self, config):
        raise NotImplementedError

    def solver_options(self, config):
        """傳給 spectra / certificates 服務的求解參數。"""
        return {'tol': config['tol'], 'driver': config['driver'], 'jobs': config['jobs']}

    def spec(self, config, L=None):
        return ProfileSpec(
            n=config['n'],
            r=config['r'][0],
            L=config['L'][-1] if L is None else L,
            t_body=config['t_body'],
            w_taper=config['w_taper'],
            N=config['N'],
        )

    def profile(self, config):
        if config['profile'] == 'round':
            return build_round_profile(config['n'], 1.0, config['N'])
        return build_pinocchio_profile(self.spec(config))

    def emit(self, config, columns, rows, summary):
        summary = dict(summary)
        summary['config'] = ExperimentConfigSerializer(config).data
        return artifacts.emit(config['out'], self.command_name, columns, rows, summary)

    def verdict(self, message, ok=True):
        style = self.style.SUCCESS if ok else self.style.ERROR
        self.stdout.write(style(message))
