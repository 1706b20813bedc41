# Pydantic schemas 