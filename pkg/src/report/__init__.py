from ._output import (
    CSV_COLUMNS,
    TOOL_VERSION,
    compareDocument,
    criteriaDocument,
    detProxy,
    integrateDocument,
    sanitize,
    validationDocument,
    writeJson,
    writeTrajectoryCsv,
)
