# API modules 