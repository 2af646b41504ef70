# Geodesic solvers
