# Manifolds
