"""cvswap - Continuous-Variable Entanglement Swapping

Symbolic Heisenberg-picture simulation of unconditional entanglement
swapping with squeezed light, and teleportation of coherent states through
the swapped entanglement.
"""
