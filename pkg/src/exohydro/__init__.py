"""Design and simulation toolkit for reconfigurable hydrostatic
actuation in load-bearing exoskeletons.

The package splits into a demand-analysis side (``profiles``,
``analysis``, ``optimizer``) that works on ground-reaction-force
waveforms alone, a component-model side (``hydraulics``), and a
closed-loop bench simulator (``sim``) that ties the components together
under the force controller.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
