"""mapcl: semantic road maps with a configuration logic toolchain.

Layers, bottom up:

* ``segments`` -- interval / curve / region segment algebra;
* ``graph`` / ``maps`` -- metric graphs, rides, distances, addressing,
  road/junction structure and builders;
* ``logic`` -- formula ASTs, parser, printer, generators;
* ``checker`` / ``translate`` / ``sat`` -- model checking and
  satisfiability via reduction to linear real arithmetic;
* ``slarith`` -- exact Fourier-Motzkin solver and SMT-LIB export;
* ``world`` / ``monitor`` -- discrete-step traffic worlds, scenes,
  scenario simulation, and finite-trace rule monitoring;
* ``cli`` -- the ``mapcl`` command.
"""

__version__ = "0.1.0"
