# Object lifecycle and set-wise method package
from runtime.lifecycle import (
    assign_component,
    assign_components,
    delete_component,
    destroy_objects,
    group_by_class,
    insert_component,
    new_object,
)
from runtime.methods import SetProcedure, Step, StepKind, compile_method, exec_method, run_procedure
from runtime.executor import Outcome, execute
