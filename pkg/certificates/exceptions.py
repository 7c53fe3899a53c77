class TheoremViolation(Exception):
    """已證明的不等式在容許誤差外不成立，代表求解器有錯。"""

    def __init__(self, report, violations):
        self.report = report
        self.violations = tuple(violations)
        super().__init__("定理檢查失敗：" + "；".join(self.violations))
