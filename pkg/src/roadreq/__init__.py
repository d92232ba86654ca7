"""Requirements engine for multi-label classification with logical constraints."""
