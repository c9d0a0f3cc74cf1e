from ._dopri import DenseSolution, DormandPrince, integrateAdaptive
from ._riccati import EscapeWatch, integrateMatrixRiccati, integrateScalarRiccati, riccatiRhs
from ._system import buildTrajectory, conjoinedDefect, integrateScalarSystem, integrateSystem, systemRhs
from ._zeros import detectDetZeros, findNearMisses, scalarZeros, zeroRatio
