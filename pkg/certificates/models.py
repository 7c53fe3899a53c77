from django.db import models


class CertificateRecord(models.Model):
    KIND_CERTIFICATE = 'certificate'
    KIND_SWEEP = 'sweep'
    KIND_CHOICES = (
        (KIND_CERTIFICATE, '反例證書'),
        (KIND_SWEEP, 'sweep 格子'),
    )
    VERDICT_CHOICES = (
        ('REFUTED', '已反駁'),
        ('NOT_REFUTED', '未反駁'),
    )

    kind = models.CharField('紀錄類型', max_length=20, choices=KIND_CHOICES)
    n = models.PositiveSmallIntegerField('維度')
    r = models.FloatField('neck 半徑')
    L = models.FloatField('neck 長度')
    N = models.PositiveIntegerField('每單位長度格數', db_column='cells_per_unit')
    lambda1_sq = models.FloatField('λ₁²')
    err_lambda = models.FloatField('λ₁² 誤差')
    conjecture_rhs = models.FloatField('猜想右式')
    err_rhs = models.FloatField('右式誤差')
    cap_C1 = models.FloatField('cap 上界 C₁')
    margin = models.FloatField('差距')
    verdict = models.CharField('判定', max_length=20, choices=VERDICT_CHOICES)
    config = models.JSONField('實驗設定', default=dict, blank=True)
    created_at = models.DateTimeField('建立時間', auto_now_add=True)

    class Meta:
        ordering = ('n', 'r', 'L', 'N')

    def __str__(self):
        return f"n={self.n} r={self.r:g} L={self.L:g} N={self.N}: {self.verdict}"

    @property
    def error_budget(self):
        return self.err_lambda + self.err_rhs
