# Generated by Django 5.2.1 on 2026-10-18 10:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='CertificateRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('certificate', '反例證書'), ('sweep', 'sweep 格子')], max_length=20, verbose_name='紀錄類型')),
                ('n', models.PositiveSmallIntegerField(verbose_name='維度')),
                ('r', models.FloatField(verbose_name='neck 半徑')),
                ('L', models.FloatField(verbose_name='neck 長度')),
                ('N', models.PositiveIntegerField(db_column='cells_per_unit', verbose_name='每單位長度格數')),
                ('lambda1_sq', models.FloatField(verbose_name='λ₁²')),
                ('err_lambda', models.FloatField(verbose_name='λ₁² 誤差')),
                ('conjecture_rhs', models.FloatField(verbose_name='猜想右式')),
                ('err_rhs', models.FloatField(verbose_name='右式誤差')),
                ('cap_C1', models.FloatField(verbose_name='cap 上界 C₁')),
                ('margin', models.FloatField(verbose_name='差距')),
                ('verdict', models.CharField(choices=[('REFUTED', '已反駁'), ('NOT_REFUTED', '未反駁')], max_length=20, verbose_name='判定')),
                ('config', models.JSONField(blank=True, default=dict, verbose_name='實驗設定')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='建立時間')),
            ],
            options={
                'ordering': ('n', 'r', 'L', 'N'),
            },
        ),
    ]
