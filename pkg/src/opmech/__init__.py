"""Operator mechanics: symbolic KvN Liouvillians for constrained systems."""
from .mechanics.builtins import BUILTINS, builtin
from .mechanics.liouvillian import derive, liouvillian
from .mechanics.verify import run_checks
from .operators import OperatorExpr, commutator
from .scalar import SymbolTable, canon, parse_expr
from .sysfile import load_system, parse_system

__all__ = ["BUILTINS", "OperatorExpr", "SymbolTable", "builtin", "canon", "commutator", "derive",
           "liouvillian", "load_system", "parse_expr", "parse_system", "run_checks"]
