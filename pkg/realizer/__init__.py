from .app import create_app
from .compiler import abstract_eliminate
from .compiler import parse_lambda
from .extract import extract_witness
from .forcing import check_closure_laws
from .forcing import condition_system
from .machine import exec_tree
from .machine import in_pole
from .machine import run_linear
from .machine import step
from .syntax import parse_term
from .syntax import Process
from .syntax import Stack

__all__ = [
    'abstract_eliminate',
    'check_closure_laws',
    'condition_system',
    'create_app',
    'exec_tree',
    'extract_witness',
    'in_pole',
    'parse_lambda',
    'parse_term',
    'Process',
    'run_linear',
    'Stack',
    'step',
]
