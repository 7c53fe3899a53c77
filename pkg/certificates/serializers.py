import math

from django.conf import settings
from rest_framework import serializers

from geometry.conformal import DEFAULT_EPS
from spectra.eigensolve import DRIVERS
from spectra.radial_operators import OPERATOR_KINDS
from .models import CertificateRecord

COMMANDS = ('spectrum', 'curvature', 'bounds', 'certificate', 'sweep', 'conformal', 'oracle')
PROFILES = ('pinocchio', 'round')


### JSON 不接受 NaN / inf，非有限值一律輸出 null
class FiniteFloatField(serializers.FloatField):

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


def _default_N():
    return settings.SPECTRAL_LAB['DEFAULT_N']


def _default_out():
    return settings.SPECTRAL_LAB['OUTPUT_DIR']


class ExperimentConfigSerializer(serializers.Serializer):
    """
    實驗設定：JSON 設定檔與命令列旗標合併後的結果。
    validated_data 再丟回 serializer 會得到同一份設定（round-trip）。
    r、L 在 sweep 中是網格，其他指令只取一個值。
    """
    command = serializers.ChoiceField(choices=COMMANDS)
    profile = serializers.ChoiceField(choices=PROFILES, default='pinocchio')
    operator = serializers.ChoiceField(choices=OPERATOR_KINDS, default='dirac')
    n = serializers.IntegerField(min_value=2, default=3)
    r = serializers.ListField(child=serializers.FloatField(), min_length=1, default=[0.1])
    L = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=1, default=[100.0])
    N = serializers.IntegerField(min_value=16, default=_default_N)
    k = serializers.IntegerField(min_value=1, default=5)
    t_body = serializers.FloatField(default=2.0)
    w_taper = serializers.FloatField(default=1.0)
    eps = serializers.ListField(child=serializers.FloatField(), default=list(DEFAULT_EPS))
    j = serializers.ListField(child=serializers.IntegerField(min_value=0), default=[0, 1, 2])
    estimate_errors = serializers.BooleanField(default=False)
    cap = serializers.BooleanField(default=False)
    out = serializers.CharField(default=_default_out)
    tol = serializers.FloatField(min_value=0.0, allow_null=True, default=None)
    jobs = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    driver = serializers.ChoiceField(choices=DRIVERS, allow_null=True, default=None)
    record = serializers.BooleanField(default=False)

    def validate_r(self, value):
        if any(not 0.0 < r < 1.0 for r in value):
            raise serializers.ValidationError("r 必須落在 (0, 1)。")
        return value

    def validate_eps(self, value):
        if any(e <= 0.0 for e in value):
            raise serializers.ValidationError("ε 必須為正。")
        return value

    def validate(self, attrs):
        command = attrs['command']
        if command != 'sweep' and command != 'curvature':
            if len(attrs['r']) != 1 or len(attrs['L']) != 1:
                raise serializers.ValidationError(f"{command} 只接受單一的 r 與 L。")
        if command == 'curvature' and len(attrs['r']) != 1:
            raise serializers.ValidationError("curvature 只接受單一的 r。")
        if command in ('certificate', 'sweep') and attrs['profile'] != 'pinocchio':
            raise serializers.ValidationError(f"{command} 只適用於 Pinocchio profile。")
        return attrs


class SpectrumEntrySerializer(serializers.Serializer):
    value = FiniteFloatField()
    multiplicity = serializers.IntegerField()
    mode = serializers.CharField()
    radial_index = serializers.IntegerField()
    err = FiniteFloatField(allow_null=True)


class SpectrumSummarySerializer(serializers.Serializer):
    operator = serializers.CharField()
    n = serializers.IntegerField()
    truncation_floor = FiniteFloatField()
    certified = serializers.BooleanField()
    cap = serializers.BooleanField()
    total_multiplicity = serializers.IntegerField()
    meta = serializers.DictField()


class GlobalQuantitiesSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    vol = FiniteFloatField()
    total_S = FiniteFloatField()
    ratio = FiniteFloatField()
    omega = FiniteFloatField()
    region_volumes = serializers.DictField(child=FiniteFloatField())
    region_totals = serializers.DictField(child=FiniteFloatField())


class NeckTailFitSerializer(serializers.Serializer):
    L_values = serializers.ListField(child=FiniteFloatField())
    gaps = serializers.ListField(child=FiniteFloatField())
    intercept = FiniteFloatField()
    slope = FiniteFloatField()
    C = FiniteFloatField()
    predicted_gap = FiniteFloatField()
    relative_error = FiniteFloatField()
    verified = serializers.BooleanField()


class BoundReportSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    lambda1_sq = FiniteFloatField()
    err_lambda1_sq = FiniteFloatField()
    S_min = FiniteFloatField()
    mu1 = FiniteFloatField(allow_null=True)
    lichnerowicz_rhs = FiniteFloatField()
    friedrich_rhs = FiniteFloatField()
    hijazi_rhs = FiniteFloatField(allow_null=True)
    baer_rhs = FiniteFloatField(allow_null=True)
    conjecture_rhs = FiniteFloatField()
    slacks = serializers.DictField(child=FiniteFloatField())
    tol = FiniteFloatField()


class CertificateSerializer(serializers.Serializer):
    """證書 JSON schema：欄位與順序固定。"""
    n = serializers.IntegerField(min_value=3)
    r = FiniteFloatField()
    L = FiniteFloatField(min_value=0.0)
    N = serializers.IntegerField(min_value=16)
    lambda1_sq = FiniteFloatField(min_value=0.0)
    err_lambda = FiniteFloatField(min_value=0.0)
    conjecture_rhs = FiniteFloatField()
    err_rhs = FiniteFloatField(min_value=0.0)
    cap_C1 = FiniteFloatField(allow_null=True)
    margin = FiniteFloatField()
    verdict = serializers.ChoiceField(choices=CertificateRecord.VERDICT_CHOICES)

    def validate(self, attrs):
        budget = attrs['err_lambda'] + attrs['err_rhs']
        if attrs['verdict'] == 'REFUTED' and not attrs['margin'] > budget:
            raise serializers.ValidationError("REFUTED 需要 margin 大於誤差預算。")
        return attrs


class CertificateRecordSerializer(serializers.ModelSerializer):
    error_budget = serializers.SerializerMethodField()

    class Meta:
        model = CertificateRecord
        fields = [
            'id', 'kind', 'n', 'r', 'L', 'N', 'lambda1_sq', 'err_lambda',
            'conjecture_rhs', 'err_rhs', 'cap_C1', 'margin', 'verdict', 'error_budget',
        ]

    def get_error_budget(self, obj):
        return obj.error_budget


class CapBoundsSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    t_body = FiniteFloatField()
    w_taper = FiniteFloatField()
    N = serializers.IntegerField()
    operator = serializers.CharField()
    values = serializers.ListField(child=FiniteFloatField())
    errors = serializers.ListField(child=FiniteFloatField())


class EpsilonSweepSerializer(serializers.Serializer):
    j = serializers.IntegerField()
    mu_j = FiniteFloatField(source='mu')
    extrapolated_limit = FiniteFloatField()
    residual = FiniteFloatField()


class ConformalCheckSerializer(serializers.Serializer):
    total_S1 = FiniteFloatField()
    vol1 = FiniteFloatField()
    total_uYu = FiniteFloatField()
    identity_residual = FiniteFloatField()


class OracleCheckSerializer(serializers.Serializer):
    name = serializers.CharField()
    expected = FiniteFloatField()
    observed = FiniteFloatField()
    expected_mult = serializers.IntegerField(allow_null=True)
    observed_mult = serializers.IntegerField(allow_null=True)
    rel_error = FiniteFloatField()
    passed = serializers.BooleanField()


class OracleReportSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    N = serializers.IntegerField()
    passed = serializers.BooleanField()
    max_rel_error = FiniteFloatField()
    checks = OracleCheckSerializer(many=True)
