from ._integral import IntegralRiccatiInstance, comparisonCheck, integralRiccatiResidual, solveIntegralRiccati
from ._transforms import (
    ReconstructedDense,
    TransformedCoeffs,
    reconstructSolution,
    systemResidual,
    transformedCoeffs,
    transformedRiccatiRhs,
)
