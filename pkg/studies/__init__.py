# Experiment studies
