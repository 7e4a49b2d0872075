"""JSON and weight helpers shared by the engine modules."""
