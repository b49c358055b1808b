//! Experiment orchestration (under construction).
