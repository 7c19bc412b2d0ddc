"""Graph coverings, subgroup graphs of free groups, and commensurations.

Submodules: ``graph`` (Serre graphs and morphisms), ``covering`` (covering
maps, folding, common covers), ``stallings`` (subgroups of free groups),
``amalgam`` (commensurations and finite quotient amalgams), ``vh`` (square
complexes and cross-sections), ``abelian`` (integer matrix groups and
completions), ``formats``/``certificates``/``cli`` (text I/O).
"""

__version__ = "0.1.0"
