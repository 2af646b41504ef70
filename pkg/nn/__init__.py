# Neural network
