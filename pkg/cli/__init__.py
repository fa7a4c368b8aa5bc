"""
Командний рядок MARLVol
"""
