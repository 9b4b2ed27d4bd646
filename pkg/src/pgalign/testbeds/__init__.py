"""Desk-scale testbeds: spurious-correlation adaptation and ZDT-1."""
