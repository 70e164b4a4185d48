"""Kerr-resonator cat states and a resonator-network parity-encoded Ising annealer.

Modules:

* ``operators``: Hilbert spaces, operators, special states, eigensolver, partial trace.
* ``circuit``: charge-basis model of a shunted flux qubit coupled to a resonator.
* ``effective``: qutrit-resonator and three-resonator Hamiltonians and perturbative coefficients.
* ``dynamics``: Schrödinger and Lindblad integration, rotating frames, Magnus propagators.
* ``cat``: adiabatic cat-state preparation runs.
* ``threemode``: pumped three-resonator exchange on the full circuit.
* ``lhz``: spin-level parity embedding, annealing spectra and gap statistics.
* ``resonator_lhz``: the resonator-network annealer.
* ``analysis``: Wigner functions, fidelities, cat readout.
* ``io`` / ``cli``: configs, file formats, command line.
"""

__version__ = "0.1.0"
