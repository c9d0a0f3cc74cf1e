from ._compare import CRITERIA, CRITERION_KEYS, compareAll, runCriteria, runCriterion
from ._divergence import (
    checkpointIndices,
    checkpointTimes,
    divergenceEstimate,
    divergenceGrid,
    estimateFromValues,
    gridEstimate,
    runningIntegral,
)
from ._series import CriterionSeries, Factorization, evalJ, evalJ2, evalVI, factorAt, lowerBoundIntegrals, solveF
from ._verdicts import (
    EIGEN,
    FACTORED,
    FUNCTIONAL,
    RECIPROCAL,
    SCALAR,
    ShiftedCoeffs,
    eigenCriterion,
    factoredCriterion,
    functionalCriterion,
    reciprocalCriterion,
    scalarCriterion,
    scalarCriterionForSystem,
    shiftedCoeffs,
)
