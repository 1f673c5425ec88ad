"""Spiking LIF networks with exact event handling and adjoint gradients."""
