"""Centralized numerical tolerances.

Operations and tests import these constants so that contracts and their
checks never drift apart.
"""

# Residual bound for eigenpairs, relative to the matrix norm.
EPS_RESID = 1e-10

# Allowed Hermiticity defect for operators declared Hermitian.
EPS_HERM = 1e-12

# Most negative eigenvalue tolerated when classifying an operator as
# positive semidefinite (states coming out of long integrations carry
# tiny negative eigenvalues).
EPS_PSD = 1e-9

# Positivity slack for declared-positive coupling operators.
EPS_POSITIVE = 1e-12

# An eigenoperator counts as traceful when |Tr| exceeds this.
EPS_TRACE = 1e-10

# Relative cutoff on expansion coefficients deciding "initial support".
EPS_SUPPORT = 1e-10

# Left/right eigenoperator pairings below this raise a degeneracy error.
EPS_PAIRING = 1e-12

# Eigenvector-matrix condition number beyond which a Liouvillian is
# treated as near-defective (exceptional-point vicinity).
COND_DEFECTIVE = 1e8

# Relative tolerance for phase-boundary detection in the qubit model.
EPS_BOUNDARY = 1e-9

# Entry magnitude treated as a numerical blow-up during integration.
BLOWUP_LIMIT = 1e12
