# Numerical building blocks: distribution, formula, estimation, diagnostics, data
