import chi2dual

# library names that pytest would otherwise try to collect
chi2dual.TestReport.__test__ = False
chi2dual.test_linear.__test__ = False
