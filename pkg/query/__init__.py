# O-view query engine package
from query.calculated import ProcedureInterpreter, calculated_rows, eval_calculated
from query.context import Env, QueryContext
from query.oview import (
    HOST_ID,
    ROW_ID,
    OView,
    SelectionPlan,
    compile_selection,
    context_env,
    eval_constant,
    eval_per_host,
    evaluate_select,
    extent,
    resolve_oview,
    resolve_rows,
    run_select,
    select_objects,
)
