# Script runner and interactive shell package
from shell.formatting import format_relation
from shell.session import Session, repl, run_script, run_text
